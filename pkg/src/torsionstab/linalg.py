"""Dense real matrix core.

Matrix exponential, eigenvalues, numerical rank, and the derivative stacks
``r'(t), ..., r^(k)(t)`` of a trajectory ``r(t) = exp(tA) r0``.

Derivative stacks are built from a *spectral split* of ``A``: an ordered real
Schur form block-diagonalised by real-part cluster. In that frame every row of
the stack grows like ``exp(a t)`` for its own cluster's real part ``a``, so each
row is kept as a mantissa plus a log-scale of its own. Volumes computed from
that representation stay accurate when eigenvalue real parts times ``t`` span
hundreds of orders of magnitude.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .errors import ConvergenceError, DegenerateInitialConditionError

REAL_SNAP = 1e-9
ZERO_SNAP = 1e-9
CLUSTER_TOL = 1e-6
MAX_COUPLING = 1e8


def as_matrix(A):
    """Validate and return ``A`` as a float64 ``(n, n)`` array."""
    M = np.array(A, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix entries must be finite")
    return M


def as_vector(r0, n):
    v = np.array(r0, dtype=np.float64).reshape(-1)
    if v.shape != (n,):
        raise ValueError(f"initial condition must have {n} entries, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ValueError("initial condition must be finite")
    return v


def mat_exp(A, t):
    """``exp(tA)``. Exactly the identity for ``t == 0``."""
    A = as_matrix(A)
    t = float(t)
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    n = A.shape[0]
    if t == 0.0:
        return np.eye(n)
    with np.errstate(over="ignore", invalid="ignore"):
        E = sla.expm(t * A)
    if not np.all(np.isfinite(E)):
        raise OverflowError(f"exp(tA) overflows at t={t!r}")
    return E


def eigenvalues(A):
    """Eigenvalues with algebraic multiplicity.

    Near-real values are snapped onto the real axis, conjugate pairs are made
    exactly conjugate, and the result is sorted by real part descending, then
    ``|im|`` ascending (positive imaginary part first within a pair).
    """
    A = as_matrix(A)
    try:
        lam = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigenvalue iteration failed: {exc}", iterations=30 * A.shape[0]) from exc

    re = lam.real.copy()
    im = lam.imag.copy()
    im[np.abs(im) < REAL_SNAP * (1.0 + np.abs(lam))] = 0.0

    # pair conjugates and average them
    used = np.zeros(len(lam), dtype=bool)
    out = []
    for i in np.argsort(-np.abs(im), kind="stable"):
        if used[i]:
            continue
        used[i] = True
        if im[i] == 0.0:
            out.append(complex(re[i], 0.0))
            continue
        cand = [j for j in range(len(lam)) if not used[j] and im[j] * im[i] < 0]
        if not cand:
            out.append(complex(re[i], 0.0))
            continue
        j = min(cand, key=lambda j: abs(complex(re[j], im[j]) - complex(re[i], -im[i])))
        used[j] = True
        a = 0.5 * (re[i] + re[j])
        b = 0.5 * (abs(im[i]) + abs(im[j]))
        out.extend([complex(a, b), complex(a, -b)])
    out.sort(key=lambda z: (-z.real, abs(z.imag), -z.imag))
    return out


def numerical_rank(A, tol, scale=None):
    """Number of singular values above ``tol * scale``.

    ``scale`` defaults to the largest singular value, so the zero matrix has
    rank 0.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = np.atleast_2d(np.asarray(A, dtype=np.float64))
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    ref = s[0] if scale is None else float(scale)
    if ref == 0.0:
        return 0
    return int(np.sum(s > tol * ref))


@dataclass(frozen=True)
class SpectralSplit:
    """``A = Q Y D Y^{-1} Q^T`` with ``Q`` orthogonal, ``Y`` unit upper block
    triangular and ``D`` block diagonal, one block per real-part cluster.

    Clusters are ordered by decreasing real part.
    """

    frame: np.ndarray
    coupling: np.ndarray
    block_matrix: np.ndarray
    blocks: tuple  # of (start, stop, real_part)

    @property
    def n(self):
        return self.frame.shape[0]


def _clusters(A):
    lam = np.linalg.eigvals(A)
    re = np.sort(lam.real)[::-1]
    tol = CLUSTER_TOL * max(1.0, np.linalg.norm(A, 2))
    groups = [[re[0]]]
    for x in re[1:]:
        if groups[-1][-1] - x <= tol:
            groups[-1].append(x)
        else:
            groups.append([x])
    return groups


def spectral_split(A):
    A = as_matrix(A)
    n = A.shape[0]
    groups = _clusters(A)
    sizes = [len(g) for g in groups]

    Q = np.eye(n)
    T = A.copy()
    start = 0
    ok_sizes = []
    for c in range(len(groups) - 1):
        thr = 0.5 * (groups[c][-1] + groups[c + 1][0])
        sub = T[start:, start:]
        T2, Z, sdim = sla.schur(sub, output="real", sort=lambda x, y=None, thr=thr: np.real(x) > thr)
        if sdim != sizes[c]:
            break
        Q[:, start:] = Q[:, start:] @ Z
        T[:start, start:] = T[:start, start:] @ Z
        T[start:, start:] = T2
        ok_sizes.append(sizes[c])
        start += sizes[c]
    ok_sizes.append(n - start)

    # block-diagonalise, merging the tail whenever the coupling is ill-conditioned
    bounds = np.cumsum([0] + ok_sizes)
    Y = np.eye(n)
    final = []
    for c in range(len(ok_sizes)):
        s, e = int(bounds[c]), int(bounds[c + 1])
        if c == len(ok_sizes) - 1:
            final.append((s, n))
            break
        X = sla.solve_sylvester(T[s:e, s:e], -T[e:, e:], -T[s:e, e:])
        if not np.all(np.isfinite(X)) or np.max(np.abs(X), initial=0.0) > MAX_COUPLING:
            final.append((s, n))
            break
        Y[s:e, e:] = X
        final.append((s, e))

    # Y so far holds one Sylvester solution per block row; the product of the
    # elementary couplings is accumulated from the bottom up.
    Ytot = np.eye(n)
    for s, e in reversed(final):
        if e == n:
            continue
        step = np.eye(n)
        step[s:e, e:] = Y[s:e, e:]
        Ytot = step @ Ytot
    D = np.zeros_like(T)
    blocks = []
    for s, e in final:
        D[s:e, s:e] = T[s:e, s:e]
        re = np.linalg.eigvals(T[s:e, s:e]).real
        a = float(np.mean(re)) if np.ptp(re) <= CLUSTER_TOL * max(1.0, np.abs(re).max()) else float(re.max())
        blocks.append((s, e, a))
    return SpectralSplit(frame=Q, coupling=Ytot, block_matrix=D, blocks=tuple(blocks))


@dataclass(frozen=True)
class DerivativeStack:
    """Derivatives ``r^(j)(t) = exp(log_scale) * vectors[:, j-1]``, j = 1..k.

    ``mantissa``/``row_log_scale`` are the same vectors in the spectral frame,
    row ``i`` scaled by ``exp(row_log_scale[i])``; they differ from ``vectors``
    by an orthogonal map and so span parallelotopes of identical volume.
    """

    t: float
    vectors: np.ndarray
    log_scale: float
    mantissa: np.ndarray = field(repr=False)
    row_log_scale: np.ndarray = field(repr=False)

    @property
    def order(self):
        return self.vectors.shape[1]

    @property
    def n(self):
        return self.vectors.shape[0]

    def true_vectors(self):
        return self.vectors * np.exp(self.log_scale)

    @classmethod
    def from_vectors(cls, vectors, t=0.0, log_scale=0.0):
        """Stack of explicitly given column vectors (no spectral frame)."""
        W = np.array(vectors, dtype=np.float64)
        if W.ndim == 1:
            W = W[:, None]
        if W.ndim != 2 or W.shape[1] < 1 or not np.all(np.isfinite(W)):
            raise ValueError("vectors must be a finite (n, k) array with k >= 1")
        mant, grades = _grade_rows(W)
        grades = grades + log_scale
        vec, ls = _normalize_global(W, log_scale)
        return cls(t=float(t), vectors=vec, log_scale=ls, mantissa=mant, row_log_scale=grades)


def _grade_rows(W):
    scale = np.max(np.abs(W), axis=-1)
    zero = scale == 0
    safe = np.where(zero, 1.0, scale)
    mant = W / safe[..., None]
    with np.errstate(divide="ignore"):
        grades = np.where(zero, -np.inf, np.log(safe))
    return mant, grades


def _normalize_global(W, log_scale):
    s = np.max(np.abs(W))
    if s == 0:
        return np.zeros_like(W), float(log_scale)
    return W / s, float(log_scale + np.log(s))


@dataclass(frozen=True)
class StackBatch:
    """Derivative stacks of one trajectory at many times, in graded form."""

    times: np.ndarray
    mantissa: np.ndarray  # (T, n, k)
    row_log_scale: np.ndarray  # (T, n)
    frame: np.ndarray

    def __len__(self):
        return len(self.times)

    def stack(self, i):
        g = self.row_log_scale[i]
        finite = np.isfinite(g)
        if not finite.any():
            vec = np.zeros(self.mantissa.shape[1:])
            ls = 0.0
        else:
            L = g[finite].max()
            w = np.where(finite, np.exp(np.where(finite, g - L, 0.0)), 0.0)
            vec, ls = _normalize_global(self.frame @ (self.mantissa[i] * w[:, None]), L)
        return DerivativeStack(t=float(self.times[i]), vectors=vec, log_scale=ls,
                               mantissa=self.mantissa[i].copy(), row_log_scale=g.copy())


def derivative_batch(A, r0, times, k, split=None):
    """Graded derivative stacks of order ``k`` at every time in ``times``."""
    A = as_matrix(A)
    n = A.shape[0]
    r0 = as_vector(r0, n)
    if not np.any(r0):
        raise DegenerateInitialConditionError("r0 = 0 is an equilibrium point, not a curve")
    if not 1 <= k <= n + 1:
        raise ValueError(f"order k must satisfy 1 <= k <= n + 1 = {n + 1}")
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    if np.any(~np.isfinite(times)):
        raise ValueError("times must be finite")
    sp = spectral_split(A) if split is None else split
    Q, Y, D = sp.frame, sp.coupling, sp.block_matrix
    y0 = sla.solve_triangular(Y, Q.T @ r0, lower=False, unit_diagonal=True)
    T = len(times)

    Z = []
    for s, e, a in sp.blocks:
        B = D[s:e, s:e]
        N = B - a * np.eye(e - s)
        if np.any(N):
            with np.errstate(over="ignore", invalid="ignore"):
                E = sla.expm(times[:, None, None] * N)
            if not np.all(np.isfinite(E)):
                bad = times[~np.all(np.isfinite(E), axis=(1, 2))][0]
                raise OverflowError(f"exp(tA) overflows at t={bad!r}")
            u = E @ y0[s:e]
        else:
            u = np.broadcast_to(y0[s:e], (T, e - s)).copy()
        cols = np.empty((T, e - s, k))
        prev = u
        for j in range(k):
            prev = prev @ B.T
            cols[:, :, j] = prev
        Z.append((s, e, a * times, cols))

    mant = np.zeros((T, n, k))
    grades = np.full((T, n), -np.inf)
    for bi, (s, e, _, _) in enumerate(Z):
        terms = []
        for s2, e2, expo, cols in Z[bi:]:
            term = np.einsum("rc,tck->trk", Y[s:e, s2:e2], cols)
            with np.errstate(divide="ignore"):
                mag = expo[:, None] + np.log(np.max(np.abs(term), axis=2))
            terms.append((expo, term, mag))
        ref = np.max(np.stack([m for _, _, m in terms]), axis=0)
        fin = np.isfinite(ref)
        acc = np.zeros((T, e - s, k))
        for expo, term, _ in terms:
            w = np.where(fin, np.exp(np.where(fin, expo[:, None] - ref, 0.0)), 0.0)
            acc += term * w[:, :, None]
        mant[:, s:e, :] = acc
        grades[:, s:e] = ref
    return StackBatch(times=times, mantissa=mant, row_log_scale=grades, frame=Q)


def derivative_stack(A, r0, t, k):
    """The vectors ``r'(t), ..., r^(k)(t)`` with a shared log-scale."""
    t = float(t)
    if t < 0:
        raise ValueError("t must be nonnegative")
    return derivative_batch(A, r0, [t], k).stack(0)
