"""Pure-numpy fallbacks for the compiled kernels in _speedups.pyx.

Signatures mirror the extension module exactly (outputs are filled in
place) so veriface.kernels can swap backends freely.
"""

import numpy as np

_FEATURE_CHUNK = 512
_COLUMN_CHUNK = 128


def gbdt_histograms(binned, idx, grad, hess, out_grad, out_hess, out_count):
    n_features = binned.shape[0]
    g = grad[idx]
    h = hess[idx]
    for start in range(0, n_features, _FEATURE_CHUNK):
        stop = min(start + _FEATURE_CHUNK, n_features)
        width = stop - start
        # flatten (feature, bin) pairs so a single bincount does the scatter-add
        flat = binned[start:stop, idx].astype(np.int64)
        flat += np.arange(width, dtype=np.int64)[:, None] << 8
        flat = flat.ravel()
        nb = width << 8
        out_grad[start:stop] = np.bincount(
            flat, weights=np.tile(g, width), minlength=nb).reshape(width, 256)
        out_hess[start:stop] = np.bincount(
            flat, weights=np.tile(h, width), minlength=nb).reshape(width, 256)
        out_count[start:stop] = np.bincount(
            flat, minlength=nb).reshape(width, 256)
        del flat


def best_split_scan(hist_grad, hist_hess, hist_count, n_edges,
                    sum_g, sum_h, n_samples,
                    min_samples_leaf, min_child_weight, lam):
    gl = np.cumsum(hist_grad, axis=1)[:, :255]
    hl = np.cumsum(hist_hess, axis=1)[:, :255]
    cl = np.cumsum(hist_count, axis=1)[:, :255]
    gr = sum_g - gl
    hr = sum_h - hl
    cr = n_samples - cl
    valid = ((np.arange(255)[None, :] < np.asarray(n_edges)[:, None])
             & (cl >= min_samples_leaf) & (cr >= min_samples_leaf)
             & (hl >= min_child_weight) & (hr >= min_child_weight)
             & (hl + lam > 0) & (hr + lam > 0))
    parent = sum_g * sum_g / (sum_h + lam) if sum_h + lam > 0 else 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        gains = gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent
    gains = np.where(valid, gains, -np.inf)
    flat = int(np.argmax(gains))                  # first max wins ties
    best = float(gains.ravel()[flat])
    if not np.isfinite(best):
        return -np.inf, -1, -1
    f, b = divmod(flat, gains.shape[1])
    return best, int(f), int(b)


def dft_split_counts(columns, labels, thresholds, out_total, out_positive):
    lab = labels.astype(bool)
    n_cols = columns.shape[0]
    for start in range(0, n_cols, _COLUMN_CHUNK):
        stop = min(start + _COLUMN_CHUNK, n_cols)
        sl = slice(start, stop)
        mask = columns[sl][:, :, None] <= thresholds[sl][:, None, :]
        out_total[sl] = mask.sum(axis=1)
        out_positive[sl] = (mask & lab[None, :, None]).sum(axis=1)
