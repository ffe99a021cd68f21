"""Ground truth from the eigenstructure of ``A``.

Classical stability verdict, Jordan block structure from rank sequences,
the structural test for ``V_2 = 0``, and closed-form limit predictions for
curvatures of diagonalisable systems and torsion of canonical-form systems.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import IllConditionedSpectrumError, PreconditionError
from .linalg import ZERO_SNAP, REAL_SNAP, as_matrix, as_vector, eigenvalues, numerical_rank
from .results import Limit, LimitPrediction, Provenance, StabilityVerdict, Verdict

GROUP_TOL = 1e-6
RANK_TOL = 1e-8
DET_TOL = 1e-9
TRICHOTOMY_TOL = 1e-9


@dataclass(frozen=True)
class SpectralSummary:
    eigs: tuple
    M: float
    N: object
    lambda_order: tuple
    invertible: bool
    semisimple_critical: bool
    diagonalizable_real: bool
    notes: tuple = field(default_factory=tuple)

    def to_dict(self):
        return {
            "eigenvalues": [[z.real, z.imag] for z in self.eigs],
            "M": self.M,
            "N": self.N,
            "lambda_order": list(self.lambda_order),
            "invertible": self.invertible,
            "semisimple_critical": self.semisimple_critical,
            "diagonalizable_real": self.diagonalizable_real,
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class JordanStructure:
    real_blocks: tuple  # ((lam, (p, ...)), ...)
    complex_blocks: tuple  # ((a, b, (m, ...)), ...)

    @property
    def n(self):
        return sum(sum(s) for _, s in self.real_blocks) + 2 * sum(sum(s) for _, _, s in self.complex_blocks)

    def to_dict(self):
        return {
            "real_blocks": [{"lambda": lam, "sizes": list(s)} for lam, s in self.real_blocks],
            "complex_blocks": [{"a": a, "b": b, "sizes": list(s)} for a, b, s in self.complex_blocks],
        }


def _scale(A):
    return max(1.0, float(np.linalg.norm(A, 2)))


def _snapped_eigs(A):
    s = _scale(A)
    norm = float(np.linalg.norm(A, 2))
    out = []
    for z in eigenvalues(A):
        re, im = z.real, z.imag
        if abs(re) < REAL_SNAP * s:
            re = 0.0
        if abs(z) < ZERO_SNAP * norm or norm == 0.0:
            re, im = 0.0, 0.0
        out.append(complex(re, im))
    return out


def _groups(eigs, s):
    """Distinct eigenvalues (upper half plane only) with multiplicities."""
    pts = [z for z in eigs if z.imag >= 0]
    pts.sort(key=lambda z: (-z.real, z.imag))
    groups = []
    for z in pts:
        for g in groups:
            if any(abs(z - w) <= GROUP_TOL * s for w in g):
                g.append(z)
                break
        else:
            groups.append([z])
    out = []
    for g in groups:
        v = complex(np.mean([w.real for w in g]), np.mean([w.imag for w in g]))
        if v.imag == 0.0 or all(w.imag == 0.0 for w in g):
            v = complex(v.real, 0.0)
        out.append((v, len(g)))
    return out


def _shifted(A, lam):
    """``A - lam I`` for real lam, the real quadratic factor for a complex pair."""
    n = A.shape[0]
    if lam.imag == 0.0:
        return A - lam.real * np.eye(n), 1
    a, b = lam.real, lam.imag
    return A @ A - 2.0 * a * A + (a * a + b * b) * np.eye(n), 2


def _rank_sequence(A, lam, upto, s):
    B, deg = _shifted(A, lam)
    ranks = [A.shape[0]]
    P = np.eye(A.shape[0])
    for j in range(1, upto + 1):
        P = P @ B
        ranks.append(numerical_rank(P, RANK_TOL, scale=s ** (deg * j)) if np.any(P) else 0)
    return ranks


def _block_sizes(A, lam, mult, s):
    if mult == 1:
        return (1,)
    ranks = _rank_sequence(A, lam, mult + 1, s)
    div = 2 if lam.imag != 0.0 else 1
    ge = [(ranks[j - 1] - ranks[j]) / div for j in range(1, mult + 2)] + [0]
    sizes = []
    for j in range(1, mult + 1):
        c = ge[j - 1] - ge[j]
        if c < 0 or c != int(c):
            raise IllConditionedSpectrumError(f"rank sequence for eigenvalue {lam:.6g} is inconsistent")
        sizes += [j] * int(c)
    if sum(sizes) != mult or ranks[mult] != ranks[mult + 1]:
        raise IllConditionedSpectrumError(
            f"eigenvalues near {lam:.6g} are too close to resolve their block structure")
    return tuple(sorted(sizes, reverse=True))


def _semisimple(A, lam, s):
    ranks = _rank_sequence(A, lam, 2, s)
    return ranks[1] == ranks[2]


def summarize(A):
    A = as_matrix(A)
    n = A.shape[0]
    s = _scale(A)
    eigs = _snapped_eigs(A)
    groups = _groups(eigs, s)
    notes = []

    M = max(z.real for z in eigs)
    semisimple = True
    for lam, mult in groups:
        if lam.real == 0.0 and mult > 1 and not _semisimple(A, lam, s):
            semisimple = False

    eig_invertible = all(z != 0 for z in eigs)
    norm = float(np.linalg.norm(A, 2))
    det = float(np.linalg.det(A))
    det_invertible = norm > 0 and abs(det) > DET_TOL * norm ** n
    invertible = det_invertible
    if eig_invertible != det_invertible:
        notes.append(f"eigenvalue and determinant invertibility tests disagree (det A = {det:.6g}); "
                     "determinant decision used")

    all_real = all(lam.imag == 0.0 for lam, _ in groups)
    diag_real = all_real and all(
        mult == 1 or numerical_rank(A - lam.real * np.eye(n), RANK_TOL, scale=s) == n - mult
        for lam, mult in groups)
    lam_order = tuple(sorted({lam.real for lam, _ in groups if lam.real != 0.0}, reverse=True)) if diag_real else ()

    # reduced spectrum: zero is kept only if it sits in a Jordan block of size >= 2
    keep_zero = False
    for lam, mult in groups:
        if lam == 0 and mult > 1:
            keep_zero = not _semisimple(A, lam, s)
    reduced = [lam.real for lam, _ in groups
               if not (lam == 0 and not keep_zero) and not (lam.imag == 0.0 and lam.real == M)]
    N = max(reduced) if reduced else None

    return SpectralSummary(
        eigs=tuple(eigs), M=float(M), N=N, lambda_order=lam_order, invertible=invertible,
        semisimple_critical=semisimple, diagonalizable_real=diag_real, notes=tuple(notes))


def classify_eigen_stability(s: SpectralSummary):
    if s.M < 0:
        v = Verdict.ASYMPTOTICALLY_STABLE
    elif s.M <= 0 and s.semisimple_critical:
        v = Verdict.STABLE
    else:
        v = Verdict.UNSTABLE
    return StabilityVerdict(v, Provenance.EIGENVALUE, ())


def jordan_structure(A, s: SpectralSummary = None):
    A = as_matrix(A)
    sc = _scale(A)
    eigs = list(s.eigs) if s is not None else _snapped_eigs(A)
    groups = _groups(eigs, sc)
    vals = [lam for lam, _ in groups]
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            if abs(vals[i] - vals[j]) <= GROUP_TOL * sc:
                raise IllConditionedSpectrumError("distinct eigenvalues closer than the resolution tolerance")
    real_blocks, complex_blocks = [], []
    for lam, mult in groups:
        sizes = _block_sizes(A, lam, mult, sc)
        if lam.imag == 0.0:
            real_blocks.append((float(lam.real), sizes))
        else:
            complex_blocks.append((float(lam.real), float(lam.imag), sizes))
    return JordanStructure(tuple(real_blocks), tuple(complex_blocks))


def v2_degenerate(j: JordanStructure):
    """True exactly for the two families on which ``V_2`` vanishes identically."""
    if j.complex_blocks:
        return False
    nonzero = [(lam, sizes) for lam, sizes in j.real_blocks if lam != 0.0]
    zero = [sizes for lam, sizes in j.real_blocks if lam == 0.0]
    zero_sizes = [p for sizes in zero for p in sizes]
    if len(nonzero) <= 1 and all(p == 1 for _, sizes in nonzero for p in sizes) and all(p == 1 for p in zero_sizes):
        return True
    return not nonzero and all(p in (1, 2) for p in zero_sizes)


def predict_kappa_limit_diagonal(s: SpectralSummary, i):
    """Limit of ``kappa_i`` for a real diagonalisable system."""
    if i < 1:
        raise ValueError("curvature index must be >= 1")
    if not s.diagonalizable_real:
        return LimitPrediction(Limit.NOT_PREDICTED, applicable=False, reason="not diagonalizable over the reals")
    lam = s.lambda_order
    if len(lam) < i + 1:
        return LimitPrediction(Limit.ZERO, reason="curve confined to lower-dimensional span")
    lhs, rhs = lam[0] + lam[i - 1], lam[i]
    tol = TRICHOTOMY_TOL * max(1.0, abs(lhs), abs(rhs))
    if lhs > rhs + tol:
        return LimitPrediction(Limit.ZERO, reason="exponent comparison: lambda_1 + lambda_i > lambda_{i+1}")
    if lhs < rhs - tol:
        return LimitPrediction(Limit.INFINITY, reason="exponent comparison: lambda_1 + lambda_i < lambda_{i+1}")
    return LimitPrediction(Limit.POSITIVE_CONST, reason="exponent comparison: lambda_1 + lambda_i = lambda_{i+1}")


def canonical_blocks(A):
    """Parse ``A`` as a block diagonal of ``J_p(lam)`` and ``C_m(a, b)`` blocks.

    Returns a list of ``("J", start, p, lam)`` / ``("C", start, m, a, b)`` or
    None when ``A`` is not exactly in that form.
    """
    A = as_matrix(A)
    n = A.shape[0]
    blocks = []
    i = 0
    while i < n:
        if i + 1 < n and A[i + 1, i] != 0.0:
            a, b = A[i, i], A[i, i + 1]
            if not (b > 0 and A[i + 1, i] == -b and A[i + 1, i + 1] == a):
                return None
            m = 1
            while (i + 2 * m + 1 < n and A[i + 2 * m, i + 2 * m] == a and A[i + 2 * m, i + 2 * m + 1] == b
                   and A[i + 2 * m + 1, i + 2 * m] == -b and A[i + 2 * m + 1, i + 2 * m + 1] == a
                   and A[i + 2 * m - 2, i + 2 * m] == 1.0 and A[i + 2 * m - 1, i + 2 * m + 1] == 1.0):
                m += 1
            blocks.append(("C", i, m, float(a), float(b)))
            i += 2 * m
        else:
            lam = A[i, i]
            p = 1
            while i + p < n and A[i + p - 1, i + p] == 1.0 and A[i + p, i + p] == lam and A[i + p, i + p - 1] == 0.0:
                p += 1
            blocks.append(("J", i, p, float(lam)))
            i += p
    if not np.array_equal(build_canonical(blocks, n), A):
        return None
    return blocks


def build_canonical(blocks, n):
    A = np.zeros((n, n))
    for blk in blocks:
        if blk[0] == "J":
            _, i, p, lam = blk
            A[i:i + p, i:i + p] = jordan_block(lam, p)
        else:
            _, i, m, a, b = blk
            A[i:i + 2 * m, i:i + 2 * m] = rotation_block(a, b, m)
    return A


def jordan_block(lam, p):
    return lam * np.eye(p) + np.eye(p, k=1)


def rotation_block(a, b, m):
    L = np.array([[a, b], [-b, a]], dtype=float)
    C = np.kron(np.eye(m), L) + np.kron(np.eye(m, k=1), np.eye(2))
    return C


def predict_tau_limit(A, s: SpectralSummary, j: JordanStructure, r0):
    """Closed-form limit class of the torsion for a canonical-form ``A``."""
    A = as_matrix(A)
    n = A.shape[0]
    r0 = as_vector(r0, n)
    blocks = canonical_blocks(A)
    if blocks is None:
        return LimitPrediction(Limit.NOT_PREDICTED, applicable=False,
                               reason="input not in real canonical form; coordinates not block-aligned")
    if v2_degenerate(j):
        return LimitPrediction(Limit.ZERO, reason="V2 vanishes identically")
    if n < 3:
        return LimitPrediction(Limit.ZERO, reason="planar curve: torsion is zero")

    critical = [b for b in blocks if b[3] == 0.0]
    simple_rot = s.M == 0.0 and s.invertible and critical and all(b[0] == "C" and b[2] == 1 for b in critical)
    if simple_rot:
        rho = [r0[b[1]] ** 2 + r0[b[1] + 1] ** 2 for b in critical]
        if any(r == 0.0 for r in rho):
            raise PreconditionError("r0 must have a nonzero component in every critical rotation block")
        bs = [b[4] for b in critical]
        if len(bs) == 1 or all(x == bs[0] for x in bs):
            return LimitPrediction(Limit.ZERO, reason="critical rotation blocks share one frequency")
        num = 0.0
        for p in range(len(bs)):
            for q in range(p + 1, len(bs)):
                num += bs[p] ** 2 * bs[q] ** 2 * (bs[p] ** 2 - bs[q] ** 2) ** 2 * rho[p] * rho[q]
        den = sum(b * b * r for b, r in zip(bs, rho)) ** 2 * sum(b ** 4 * r for b, r in zip(bs, rho))
        return LimitPrediction(Limit.POSITIVE_CONST, value=math.sqrt(num / den),
                               reason="critical rotation blocks with distinct frequencies")

    if np.any(r0 == 0.0):
        raise PreconditionError("r0 must lie in S: every coordinate nonzero")
    if not s.invertible:
        return LimitPrediction(Limit.NOT_PREDICTED, reason="singular matrix: no torsion limit result applies")
    if s.M > 0:
        return LimitPrediction(Limit.ZERO, reason="positive spectral abscissa")
    if s.M == 0 and any(b[0] == "C" and b[3] == 0.0 and b[2] >= 2 for b in blocks):
        return LimitPrediction(Limit.ZERO, reason="critical rotation block of order >= 2")
    return LimitPrediction(Limit.NOT_PREDICTED, reason="no closed-form torsion limit for this spectrum")
