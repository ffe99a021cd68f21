"""Parallelotope volumes, higher curvatures and torsion, all in the log domain.

Conventions for log values used throughout:
``-inf`` means the quantity is exactly zero, ``None`` (scalars) or ``NaN``
(arrays) means it is undefined at that point.
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
import math

import numpy as np

from .errors import EquilibriumError, UnsupportedSizeError
from .kernels import graded_qr_logdiag
from .linalg import DerivativeStack, StackBatch

DEPENDENCE_TOL = 1e-12


@dataclass(frozen=True)
class LogVolume:
    log_value: float
    is_zero: bool
    k: int

    @property
    def value(self):
        return 0.0 if self.is_zero else math.exp(self.log_value)

    @classmethod
    def from_log(cls, lv, k):
        if lv == -np.inf:
            return cls(log_value=-math.inf, is_zero=True, k=k)
        return cls(log_value=float(lv), is_zero=False, k=k)


def log_volume_array(mantissa, grades, k):
    """``(B, k+1)`` array of ``log V_0 .. log V_k`` for a batch of graded stacks."""
    B = mantissa.shape[0]
    out = np.zeros((B, k + 1))
    if k:
        ld = graded_qr_logdiag(mantissa[:, :, :k], grades, DEPENDENCE_TOL)
        out[:, 1:] = np.cumsum(ld, axis=1)
    out[np.isnan(out)] = -np.inf
    return out


def log_volumes(stack: DerivativeStack, k=None):
    """``[V_0, ..., V_k]`` as LogVolumes, sharing one factorization."""
    k = stack.order if k is None else k
    if not 0 <= k <= stack.order:
        raise ValueError(f"k must be in [0, {stack.order}]")
    lv = log_volume_array(stack.mantissa[None], stack.row_log_scale[None], k)[0]
    return [LogVolume.from_log(v, j) for j, v in enumerate(lv)]


def log_volume(stack: DerivativeStack, k):
    """k-volume of the parallelotope on ``r', ..., r^(k)``."""
    return log_volumes(stack, k)[k]


def volume_minor_sum(stack: DerivativeStack, k):
    """Reference k-volume from the sum of squared k x k minors.

    Combinatorial, so restricted to ``k <= 3`` and ``n <= 8``.
    """
    n = stack.n
    if k > 3 or n > 8:
        raise UnsupportedSizeError(f"minor-sum volumes support k <= 3 and n <= 8, got k={k}, n={n}")
    if k < 0 or k > stack.order:
        raise ValueError(f"k must be in [0, {stack.order}]")
    if k == 0:
        return LogVolume(0.0, False, 0)
    # rows of the spectral frame: same volumes as the original coordinates
    g = stack.row_log_scale
    fin = np.isfinite(g)
    if not fin.any():
        return LogVolume(-math.inf, True, k)
    L = float(g[fin].max())
    W = stack.mantissa[:, :k] * np.where(fin, np.exp(np.where(fin, g - L, 0.0)), 0.0)[:, None]
    # minors in exact rational arithmetic, so the only rounding is the final sqrt
    F = [[Fraction(float(x)) for x in row] for row in W]
    prev = Fraction(1)
    for j in range(1, k + 1):
        total = Fraction(0)
        for rows in combinations(range(n), j):
            total += _det([F[r][:j] for r in rows]) ** 2
        # column j is dependent when its component orthogonal to the earlier
        # columns is below DEPENDENCE_TOL of its own length
        norm2 = sum(F[r][j - 1] ** 2 for r in range(n))
        if total <= Fraction(DEPENDENCE_TOL) ** 2 * prev * norm2:
            return LogVolume(-math.inf, True, k)
        prev = total
    log_total = math.log(total.numerator) - math.log(total.denominator)
    return LogVolume(0.5 * log_total + k * L, False, k)


def _det(M):
    if len(M) == 1:
        return M[0][0]
    if len(M) == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    return sum((-1) ** c * M[0][c] * _det([row[:c] + row[c + 1:] for row in M[1:]]) for c in range(len(M)))


def curvature_logs(logv, n, structural_zero=False):
    """Vectorised curvatures from a ``(T, k_max+1)`` array of log volumes.

    Returns ``(log_kappa (T, k_max-1), log_tau (T,))`` with NaN for undefined
    and -inf for exact zero. Rows where ``V_1 = 0`` are NaN throughout.
    """
    logv = np.atleast_2d(logv)
    T, kp1 = logv.shape
    kmax = kp1 - 1
    zero = np.isneginf(logv)
    kappa = np.full((T, max(kmax - 1, 0)), np.nan)
    for i in range(1, kmax):
        ok = ~zero[:, i]
        with np.errstate(invalid="ignore"):
            val = logv[:, i - 1] + logv[:, i + 1] - logv[:, 1] - 2.0 * logv[:, i]
        kappa[:, i - 1] = np.where(ok, np.where(zero[:, i + 1], -np.inf, val), np.nan)
    if n < 3:
        tau = np.full(T, -np.inf)
    elif kmax < 3:
        tau = np.full(T, np.nan)
    else:
        with np.errstate(invalid="ignore"):
            val = np.where(zero[:, 3], -np.inf, logv[:, 3] - 2.0 * logv[:, 2])
        tau = np.where(zero[:, 2], -np.inf if structural_zero else np.nan, val)
    eq = zero[:, 1]
    kappa[eq] = np.nan
    tau = np.where(eq, np.nan, tau)
    return kappa, tau


def _opt(x):
    return None if np.isnan(x) else float(x)


@dataclass(frozen=True)
class CurvatureSample:
    t: float
    n: int
    log_V: list
    log_kappa: list  # float, -inf for zero, None for undefined
    log_tau: object
    m_detected: int

    def kappa(self, i):
        v = self.log_kappa[i - 1]
        return None if v is None else math.exp(v)

    @property
    def tau(self):
        return None if self.log_tau is None else math.exp(self.log_tau)


def curvature_profile(stack: DerivativeStack, structural_zero=False):
    """Volumes, curvatures ``kappa_1 .. kappa_{k-1}`` and torsion at one time.

    ``structural_zero`` says V_2 vanishes identically for this system, in
    which case a zero V_2 gives torsion 0 instead of undefined.
    """
    if stack.order < 2:
        raise ValueError("curvature_profile needs a stack of order >= 2")
    vols = log_volumes(stack)
    if vols[1].is_zero:
        raise EquilibriumError(f"velocity vanished at t={stack.t!r}")
    logv = np.array([v.log_value for v in vols])
    kappa, tau = curvature_logs(logv[None], stack.n, structural_zero)
    m = max(j for j, v in enumerate(vols) if not v.is_zero)
    return CurvatureSample(
        t=stack.t,
        n=stack.n,
        log_V=vols,
        log_kappa=[_opt(x) for x in kappa[0]],
        log_tau=_opt(tau[0]),
        m_detected=m,
    )


def torsion(sample: CurvatureSample, structural_zero):
    """Torsion ``V_3 / V_2^2`` or None where it is undefined."""
    if sample.n < 3 or structural_zero:
        return 0.0
    if len(sample.log_V) < 4:
        return None
    v2, v3 = sample.log_V[2], sample.log_V[3]
    if v2.is_zero:
        return None
    if v3.is_zero:
        return 0.0
    return math.exp(v3.log_value - 2.0 * v2.log_value)


def batch_log_volumes(batch: StackBatch, k=None):
    k = batch.mantissa.shape[2] if k is None else k
    return log_volume_array(batch.mantissa, batch.row_log_scale, k)
