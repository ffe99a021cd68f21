"""Pure-Python (numpy) implementation of the graded QR kernel.

Each matrix in the batch is stored row-wise as ``mantissa[i, :] * exp(grade[i])``.
Householder reflections are applied in the units of the pivot row, so rows whose
true magnitudes differ by hundreds of orders never underflow: the kernel only ever
touches mantissas of order one and differences of grades.

Row interchanges are free (volumes are invariant under orthogonal maps). An
eliminated entry that cancels below ``tol`` times the larger of its two
contributions is set to an exact zero; that is how linear dependence is decided.
"""

import numpy as np

_MAX_EXP = 700.0


def _normalize_rows(M, g, cols):
    scale = np.max(np.abs(M[:, :, cols]), axis=2) if M.shape[2] else np.zeros(M.shape[:2])
    zero = scale == 0.0
    safe = np.where(zero, 1.0, scale)
    M[:, :, cols] /= safe[:, :, None]
    with np.errstate(divide="ignore"):
        g += np.log(safe)
    g[zero] = -np.inf
    M[zero] = 0.0


def graded_qr_logdiag(mantissa, grades, tol=1e-12):
    """Log-magnitudes of the R diagonal for a batch of row-graded matrices.

    Parameters
    ----------
    mantissa : (B, n, k) float array
    grades : (B, n) float array, ``-inf`` marks a zero row
    tol : relative cancellation threshold

    Returns
    -------
    (B, k) array; ``out[b, j]`` is ``log |R_jj|`` or ``-inf`` once column ``j``
    is dependent on the columns before it (all later entries are ``-inf`` too).
    """
    M = np.array(mantissa, dtype=np.float64, copy=True)
    g = np.array(grades, dtype=np.float64, copy=True)
    if M.ndim != 3 or g.shape != M.shape[:2]:
        raise ValueError("mantissa must be (B, n, k) and grades (B, n)")
    B, n, k = M.shape
    out = np.full((B, k), -np.inf)
    if B == 0 or k == 0:
        return out
    g[~np.isfinite(g)] = -np.inf
    _normalize_rows(M, g, slice(None))
    dead = np.zeros(B, dtype=bool)
    idx = np.arange(B)

    for j in range(k):
        if j >= n:
            break
        col = M[:, j:, j]
        with np.errstate(divide="ignore"):
            eff = g[:, j:] + np.log(np.abs(col))
        eff[col == 0.0] = -np.inf
        p = np.argmax(eff, axis=1) + j
        best = eff[idx, p - j]
        dead |= ~np.isfinite(best)
        if dead.all():
            break

        # bring the pivot row to position j
        rows_j = M[idx, j].copy()
        M[idx, j] = M[idx, p]
        M[idx, p] = rows_j
        g_j = g[idx, j].copy()
        g[idx, j] = g[idx, p]
        g[idx, p] = g_j

        live = ~dead
        gj = np.where(live, g[:, j], 0.0)
        with np.errstate(invalid="ignore"):
            diff = g[:, j + 1:] - gj[:, None]
        diff = np.where(np.isnan(diff), -np.inf, np.minimum(diff, _MAX_EXP))
        c = np.exp(diff)
        h_rest = M[:, j + 1:, j] * c
        # h_i * c_i, the weight of row i's other entries in pivot units
        hc = M[:, j + 1:, j] * np.exp(np.minimum(2.0 * diff, _MAX_EXP))
        h_j = M[:, j, j]

        scale = np.maximum(np.abs(h_j), np.max(np.abs(h_rest), axis=1, initial=0.0))
        scale = np.where(live & (scale > 0), scale, 1.0)
        norm = scale * np.sqrt((h_j / scale) ** 2 + np.sum((h_rest / scale[:, None]) ** 2, axis=1))
        with np.errstate(divide="ignore"):
            out[:, j] = np.where(live, gj + np.log(norm), -np.inf)

        sgn = np.where(h_j >= 0.0, 1.0, -1.0)
        v_j = h_j + sgn * norm
        vtv = 2.0 * norm * (norm + np.abs(h_j))
        beta = np.where(live, 2.0 / np.where(live, vtv, 1.0), 0.0)

        if j + 1 < k:
            cols = slice(j + 1, k)
            s = v_j[:, None] * M[:, j, cols] + np.einsum("bi,bic->bc", hc, M[:, j + 1:, cols])
            f = beta[:, None] * s
            M[:, j, cols] -= f * v_j[:, None]
            upd = f[:, None, :] * M[:, j + 1:, j][:, :, None]
            old = M[:, j + 1:, cols]
            new = old - upd
            kill = np.abs(new) <= tol * np.maximum(np.abs(old), np.abs(upd))
            new[kill] = 0.0
            M[:, j + 1:, cols] = new
        M[:, j + 1:, j] = 0.0
        if j + 1 < k:
            sub = M[:, j + 1:, :]
            gsub = g[:, j + 1:]
            _normalize_rows(sub, gsub, slice(j + 1, k))
            M[:, j + 1:, :] = sub
            g[:, j + 1:] = gsub

    out[dead[:, None] & ~np.isfinite(out)] = -np.inf
    # once a diagonal vanishes every larger volume is zero
    zero_seen = np.cumsum(~np.isfinite(out), axis=1) > 0
    out[zero_seen] = -np.inf
    return out
