"""Data-dependent orthogonal filter bank over 3x3x3 patches.

One filter bank maps each 27-dimensional patch to 27 decorrelated
channels: a fixed DC channel (the normalized constant direction) plus 26
AC channels obtained by PCA of the per-patch residuals after the DC
component is projected out.  Applying the bank is purely linear, so the
transform is exactly orthonormal and invertible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InsufficientDataError, ValidationError

PATCH_SIZE = 3
PATCH_CHANNELS = 3
PATCH_DIM = PATCH_SIZE * PATCH_SIZE * PATCH_CHANNELS  # 27
DEFAULT_STRIDE = 2


def output_size(block_size: int, filter_size: int, stride: int) -> int:
    """Spatial output size for a sliding filter: (block - filter) / stride + 1."""
    if filter_size < 1 or block_size < filter_size:
        raise ConfigError(f"need block_size >= filter_size >= 1, "
                          f"got ({block_size}, {filter_size})")
    if stride < 1:
        raise ConfigError(f"stride must be >= 1, got {stride}")
    span = block_size - filter_size
    if span % stride != 0:
        raise ConfigError(f"(block_size - filter_size) = {span} is not divisible "
                          f"by stride {stride}")
    return span // stride + 1


def extract_patches(pixels, stride: int = DEFAULT_STRIDE):
    """Flattened 3x3x3 windows of a (S, S, 3) block, row-major window order.

    Each window is flattened in C order (row, column, channel); the same
    ordering is assumed by the filter banks everywhere.
    """
    px = np.asarray(pixels, dtype=np.float64)
    if px.ndim != 3 or px.shape[2] != PATCH_CHANNELS:
        raise ValidationError(f"block must be (S, S, {PATCH_CHANNELS}), "
                              f"got {px.shape}")
    h_out = output_size(px.shape[0], PATCH_SIZE, stride)
    w_out = output_size(px.shape[1], PATCH_SIZE, stride)
    wins = np.lib.stride_tricks.sliding_window_view(px, (PATCH_SIZE, PATCH_SIZE),
                                                    axis=(0, 1))
    wins = wins[::stride, ::stride]              # (h_out, w_out, 3, 3, 3) as (c, y, x)
    wins = np.moveaxis(wins, 2, -1)              # back to (y, x, c) per window
    return wins.reshape(h_out * w_out, PATCH_DIM), (h_out, w_out)


def _dc_complement_basis():
    """Deterministic orthonormal basis (27 x 26) of the DC-orthogonal subspace."""
    dc = np.full(PATCH_DIM, 1.0 / np.sqrt(PATCH_DIM))
    e0 = np.zeros(PATCH_DIM)
    e0[0] = 1.0
    v = dc - e0
    house = np.eye(PATCH_DIM) - 2.0 * np.outer(v, v) / (v @ v)
    # first column of the reflector equals the DC direction; the rest span
    # its orthogonal complement
    return house[:, 1:]


def _fix_signs(rows):
    """Make each row's largest-magnitude entry positive (deterministic)."""
    out = rows.copy()
    for i in range(out.shape[0]):
        j = int(np.argmax(np.abs(out[i])))
        if out[i, j] < 0:
            out[i] = -out[i]
    return out


@dataclass
class SaabFilterBank:
    """Fitted bank: row 0 of filters is DC, rows 1..26 are AC filters."""

    filters: np.ndarray                 # (27, 27), orthonormal rows
    channel_energy: np.ndarray          # (27,): DC energy then AC eigenvalues
    patch_mean: np.ndarray              # (27,) residual mean used while fitting
    patch_shape: tuple = (PATCH_SIZE, PATCH_SIZE, PATCH_CHANNELS)

    @property
    def dc_filter(self):
        return self.filters[0]

    @property
    def ac_filters(self):
        return self.filters[1:]

    @property
    def n_parameters(self):
        return int(self.filters.size)


def fit_saab(patches) -> SaabFilterBank:
    """Fit the bank from flattened (N, 27) training patches.

    The DC filter is the normalized constant vector.  AC filters are the
    eigenvectors of the covariance of the per-patch residuals (patch
    minus its DC projection), mean-centered, sorted by descending
    eigenvalue with signs fixed for deterministic serialization.
    """
    pts = np.asarray(patches, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != PATCH_DIM:
        raise ValidationError(f"patches must be (N, {PATCH_DIM}), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValidationError("patches contain non-finite values")
    n = pts.shape[0]
    if n < PATCH_DIM:
        raise InsufficientDataError(f"need at least {PATCH_DIM} patches to fit a "
                                    f"filter bank, got {n}")

    dc = np.full(PATCH_DIM, 1.0 / np.sqrt(PATCH_DIM))
    dc_coef = pts @ dc
    residual = pts - np.outer(dc_coef, dc)
    patch_mean = residual.mean(axis=0)
    centered = residual - patch_mean
    cov = centered.T @ centered / n

    # eigendecompose inside the 26-dim complement of the DC direction so the
    # bank stays exactly orthonormal even for rank-deficient data
    basis = _dc_complement_basis()
    sub_cov = basis.T @ cov @ basis
    evals, evecs = np.linalg.eigh(sub_cov)
    order = np.argsort(-evals, kind="stable")
    evals = np.clip(evals[order], 0.0, None)
    ac = _fix_signs((basis @ evecs[:, order]).T)

    dc_energy = float(np.var(dc_coef))
    filters = np.vstack([dc, ac])
    energy = np.concatenate([[dc_energy], evals])
    return SaabFilterBank(filters=filters, channel_energy=energy,
                          patch_mean=patch_mean)


@dataclass
class ResponseTensor:
    values: np.ndarray                  # (h_out, w_out, 27)
    block_origin: object = None

    @property
    def flat(self):
        return self.values.reshape(-1)


def apply_saab(bank: SaabFilterBank, block, stride: int = DEFAULT_STRIDE) -> ResponseTensor:
    """Filter responses of every 3x3x3 window of a block (linear transform)."""
    pixels = block.pixels if hasattr(block, "pixels") else block
    wins, (h_out, w_out) = extract_patches(pixels, stride)
    responses = wins @ bank.filters.T
    return ResponseTensor(values=responses.reshape(h_out, w_out, PATCH_DIM),
                          block_origin=block if hasattr(block, "pixels") else None)


def extract_patches_batch(stack, stride: int = DEFAULT_STRIDE):
    """Flattened windows for a (N, S, S, 3) stack: ((N, h*w, 27), (h, w))."""
    arr = np.asarray(stack, dtype=np.float64)
    if arr.ndim != 4 or arr.shape[3] != PATCH_CHANNELS:
        raise ValidationError(f"stack must be (N, S, S, {PATCH_CHANNELS}), "
                              f"got {arr.shape}")
    h_out = output_size(arr.shape[1], PATCH_SIZE, stride)
    w_out = output_size(arr.shape[2], PATCH_SIZE, stride)
    wins = np.lib.stride_tricks.sliding_window_view(arr, (PATCH_SIZE, PATCH_SIZE),
                                                    axis=(1, 2))
    wins = wins[:, ::stride, ::stride]
    wins = np.moveaxis(wins, 3, -1)               # (N, h, w, 3, 3, 3) in (y, x, c)
    flat = wins.reshape(arr.shape[0], h_out * w_out, PATCH_DIM)
    return np.ascontiguousarray(flat), (h_out, w_out)


def apply_saab_batch(bank: SaabFilterBank, stack, stride: int = DEFAULT_STRIDE):
    """Vectorized apply over a (N, S, S, 3) stack; returns (N, h, w, 27)."""
    flat, (h_out, w_out) = extract_patches_batch(stack, stride)
    responses = flat @ bank.filters.T
    return responses.reshape(-1, h_out, w_out, PATCH_DIM)


def inverse_saab(bank: SaabFilterBank, responses):
    """Reconstruct flattened windows from all-channel responses (exact, since
    the filter matrix is orthonormal)."""
    resp = np.asarray(responses, dtype=np.float64)
    flat = resp.reshape(-1, PATCH_DIM)
    return flat @ bank.filters
