"""Built-in example systems and random canonical-form generators."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from .spectral_oracle import jordan_block, rotation_block


@dataclass(frozen=True)
class Example:
    name: str
    A: np.ndarray
    r0: np.ndarray
    label: str


def coupled_oscillators(k_over_m=1.0, kp_over_m=2.0):
    """Two unit masses joined by three springs; state (x_P, x_Q, v_P, v_Q)."""
    c, d = -(k_over_m + kp_over_m), kp_over_m
    return np.array([[0, 0, 1, 0], [0, 0, 0, 1], [c, d, 0, 0], [d, c, 0, 0]], dtype=float)


def oscillator_tau_squared(t):
    """Closed-form squared torsion of the (1, 2) oscillator from r0 = (1, 2, 1, 2)."""
    t = np.asarray(t, dtype=float)
    w = 2.0 * np.sqrt(5.0) * t
    S = np.sqrt(5.0) * np.sin(w) + 2.0 * np.cos(w)
    return (S + 17.0) / (2.0 * (S - 11.0) ** 2)


EXAMPLE1 = np.array([[-25, -8, -39, 19],
                     [-14, -10, -26, 14],
                     [9, 0, 7, -9],
                     [-5, -8, -21, -1]], dtype=float)

REMARK1 = block_diag(jordan_block(0.0, 2), rotation_block(-1.0, 1.0, 1))
REMARK2 = block_diag(jordan_block(-1.0, 3), [[0.0]])
TWO_ROTATIONS = block_diag(rotation_block(0.0, 1.0, 1), rotation_block(0.0, 2.0, 1))

EXAMPLES = {
    "paper1": Example("paper1", EXAMPLE1, np.ones(4), "diagonalizable 4x4 system with eigenvalues -2, -6, -10, -11"),
    "paper2": Example("paper2", coupled_oscillators(), np.array([1.0, 2.0, 1.0, 2.0]), "coupled oscillators, k/m = 1, k'/m = 2"),
    "remark1": Example("remark1", REMARK1, np.ones(4), "J2(0) + C1(-1, 1): singular, unstable"),
    "remark2": Example("remark2", REMARK2, np.ones(4), "J3(-1) + J1(0): singular, stable"),
    "lemma46": Example("lemma46", TWO_ROTATIONS, np.array([1.0, 0.0, 1.0, 0.0]), "C1(0, 1) + C1(0, 2)"),
}


def random_sign(rng):
    return -1.0 if rng.random() < 0.5 else 1.0


def random_diagonal(rng, n_range=(3, 6), lo=0.2, hi=3.0, min_gap=0.05):
    """Diagonal matrix with entries in +-[lo, hi], pairwise at least ``min_gap`` apart."""
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    while True:
        v = rng.uniform(lo, hi, n) * np.where(rng.random(n) < 0.5, -1.0, 1.0)
        if np.all(np.diff(np.sort(v)) >= min_gap):
            return np.diag(v)


def assemble(blocks):
    """Block diagonal from ("J", lam, p) / ("C", a, b, m) specs."""
    mats = [jordan_block(b[1], b[2]) if b[0] == "J" else rotation_block(b[1], b[2], b[3]) for b in blocks]
    return block_diag(*mats)


def _random_block(rng, budget, re_sign=None):
    """One random block fitting in ``budget`` rows; ``re_sign`` forces the real part's sign."""
    sgn = random_sign(rng) if re_sign is None else re_sign
    re = sgn * rng.uniform(0.2, 2.0)
    if budget >= 2 and rng.random() < 0.5:
        m = int(rng.integers(1, min(2, budget // 2) + 1))
        return ("C", round(re, 3), round(rng.uniform(0.5, 2.5), 3), m)
    p = int(rng.integers(1, min(3, budget) + 1))
    return ("J", round(re, 3), p)


def _size(b):
    return b[2] if b[0] == "J" else 2 * b[3]


def random_unstable_canonical(rng, n_max=6):
    """Invertible canonical form, n <= n_max, with at least one block of positive real part."""
    n = int(rng.integers(3, n_max + 1))
    blocks = [_random_block(rng, n, re_sign=1.0)]
    while sum(map(_size, blocks)) < n:
        blocks.append(_random_block(rng, n - sum(map(_size, blocks))))
    rng.shuffle(blocks)
    return assemble(blocks)


def random_critical_rotation(rng, n_max=6):
    """``C_m(0, b)`` with m >= 2 plus stable blocks, n <= n_max."""
    m = int(rng.integers(2, n_max // 2 + 1))
    blocks = [("C", 0.0, round(rng.uniform(0.5, 2.5), 3), m)]
    room = n_max - 2 * m
    extra = int(rng.integers(0, room + 1))
    while extra > 0:
        b = _random_block(rng, extra, re_sign=-1.0)
        blocks.append(b)
        extra -= _size(b)
    rng.shuffle(blocks)
    return assemble(blocks)


def random_canonical(rng, n_max=6):
    """Any canonical form with real parts in {0} u +-[0.2, 2] and n in 2..n_max."""
    n = int(rng.integers(2, n_max + 1))
    blocks = []
    while sum(map(_size, blocks)) < n:
        b = _random_block(rng, n - sum(map(_size, blocks)))
        if rng.random() < 0.2:
            b = (b[0], 0.0) + b[2:]
        blocks.append(b)
    return assemble(blocks)
