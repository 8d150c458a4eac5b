"""Per-channel PCA over flattened spatial response maps.

Channels are picked by descending filter-bank energy until 80% of the
total is covered; each picked channel gets its own PCA over the N
flattened (h*w) maps, truncated at 80% cumulative spatial energy with a
hard cap on the number of kept components.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InsufficientDataError, ValidationError
from .saab import _fix_signs

DEFAULT_ENERGY_CUTOFF = 0.8
DEFAULT_MAX_COMPONENTS = 10
_REL_TOL = 1e-12
_DEGENERATE_VAR = 1e-18


@dataclass
class ChannelPca:
    channel: int
    mean_map: np.ndarray        # (h*w,)
    components: np.ndarray      # (k, h*w), orthonormal rows
    eigenvalues: np.ndarray     # (k,) descending
    degenerate: bool = False

    @property
    def n_components(self):
        return int(self.components.shape[0])


@dataclass
class SpatialPcaModel:
    map_shape: tuple                    # (h_out, w_out)
    channels: list                      # ChannelPca in selection order
    energy_cutoff: float = DEFAULT_ENERGY_CUTOFF
    max_components: int = DEFAULT_MAX_COMPONENTS
    n_input_channels: int = 27

    @property
    def selected_channels(self):
        return [c.channel for c in self.channels]

    @property
    def n_coefficients(self):
        return int(sum(c.n_components for c in self.channels))

    @property
    def n_parameters(self):
        """Stored numbers counted for the budget: spatial dims x kept components."""
        h, w = self.map_shape
        return int(h * w * sum(c.n_components for c in self.channels))


def _cumulative_cut(values, cutoff):
    """Smallest prefix of (already ordered) values reaching cutoff of the total."""
    total = float(values.sum())
    if total <= 0:
        return 1
    target = cutoff * total - _REL_TOL * total
    cum = np.cumsum(values)
    return int(np.searchsorted(cum, target) + 1)


def select_channels(energy, cutoff: float):
    """Channel indices, by descending energy, reaching cutoff cumulative energy."""
    e = np.asarray(energy, dtype=np.float64)
    order = np.argsort(-e, kind="stable")
    k = _cumulative_cut(e[order], cutoff)
    return [int(c) for c in order[:k]]


def fit_spatial_pca(responses, channel_energy, energy_cutoff: float = DEFAULT_ENERGY_CUTOFF,
                    max_components: int = DEFAULT_MAX_COMPONENTS) -> SpatialPcaModel:
    """Fit per-channel spatial PCA from (N, h, w, C) response maps.

    channel_energy ranks the C filter-bank channels; only channels inside
    the cumulative-energy cutoff are modeled.  A zero-variance channel
    keeps a single (degenerate) component by convention.
    """
    arr = np.asarray(responses, dtype=np.float64)
    if arr.ndim != 4:
        raise ValidationError(f"responses must be (N, h, w, C), got {arr.shape}")
    n, h, w, c = arr.shape
    if n < 2:
        raise InsufficientDataError(f"need at least 2 samples to fit spatial PCA, got {n}")
    energy = np.asarray(channel_energy, dtype=np.float64)
    if energy.shape != (c,):
        raise ValidationError(f"channel_energy must have {c} entries, "
                              f"got shape {energy.shape}")
    if not 0 < energy_cutoff <= 1:
        raise ConfigError(f"energy cutoff must be in (0, 1], got {energy_cutoff}")
    if max_components < 1:
        raise ConfigError(f"max_components must be >= 1, got {max_components}")

    selected = select_channels(energy, energy_cutoff)
    channels = []
    for ch in selected:
        maps = arr[:, :, :, ch].reshape(n, h * w)
        mean_map = maps.mean(axis=0)
        centered = maps - mean_map
        cov = centered.T @ centered / n
        evals, evecs = np.linalg.eigh(cov)
        order = np.argsort(-evals, kind="stable")
        evals = np.clip(evals[order], 0.0, None)
        total = float(evals.sum())
        degenerate = total <= _DEGENERATE_VAR
        if degenerate:
            k = 1
        else:
            k = min(_cumulative_cut(evals, energy_cutoff), max_components)
        comps = _fix_signs(evecs[:, order[:k]].T)
        channels.append(ChannelPca(channel=ch, mean_map=mean_map, components=comps,
                                   eigenvalues=evals[:k], degenerate=degenerate))

    return SpatialPcaModel(map_shape=(h, w), channels=channels,
                           energy_cutoff=energy_cutoff, max_components=max_components,
                           n_input_channels=c)


def apply_spatial_pca(model: SpatialPcaModel, response):
    """Concatenated per-channel projection coefficients for one response map.

    Order is deterministic: channels in selection order, components in
    descending-eigenvalue order within a channel.
    """
    values = response.values if hasattr(response, "values") else response
    arr = np.asarray(values, dtype=np.float64)
    return apply_spatial_pca_batch(model, arr[None])[0]


def apply_spatial_pca_batch(model: SpatialPcaModel, responses):
    """Vectorized projection of (N, h, w, C) maps to (N, n_coefficients)."""
    arr = np.asarray(responses, dtype=np.float64)
    h, w = model.map_shape
    if arr.ndim != 4 or arr.shape[1:3] != (h, w) or arr.shape[3] != model.n_input_channels:
        raise ConfigError(f"response geometry {arr.shape[1:]} does not match the "
                          f"fitted model ({h}, {w}, {model.n_input_channels})")
    n = arr.shape[0]
    out = np.empty((n, model.n_coefficients), dtype=np.float64)
    col = 0
    for ch in model.channels:
        maps = arr[:, :, :, ch.channel].reshape(n, h * w)
        coeff = (maps - ch.mean_map) @ ch.components.T
        out[:, col:col + ch.n_components] = coeff
        col += ch.n_components
    return out
