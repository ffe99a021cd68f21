"""Sample curvature and torsion along a time grid and classify their tails."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math
import re

import numpy as np
from scipy.special import logsumexp

from .errors import (EquilibriumError, IllConditionedSpectrumError, InsufficientTraceError,
                     TorsionStabError)
from .geometry import batch_log_volumes, curvature_logs
from .linalg import as_matrix, as_vector, derivative_batch, spectral_split
from .results import Limit

MIN_POINTS = 16
UNDEFINED_FRACTION = 0.10
# a tail whose mean sits below this (log domain) counts as decaying to zero
ZERO_FLOOR = math.log(1e-10)


@dataclass(frozen=True)
class TraceConfig:
    t_start: float = 1.0
    t_end: float = 60.0
    num_points: int = 256
    grid: str = "geometric"
    fit_window_fraction: float = 0.5
    slope_tol: float = 0.01
    oscillation_tol: float = 0.05

    def __post_init__(self):
        if not (self.t_start > 0 and self.t_start < self.t_end):
            raise ValueError("need 0 < t_start < t_end")
        if self.num_points < MIN_POINTS:
            raise ValueError(f"num_points must be >= {MIN_POINTS}")
        if self.grid not in ("geometric", "linear"):
            raise ValueError("grid must be 'geometric' or 'linear'")
        if not 0 < self.fit_window_fraction <= 1:
            raise ValueError("fit_window_fraction must be in (0, 1]")

    def times(self):
        if self.grid == "geometric":
            return np.geomspace(self.t_start, self.t_end, self.num_points)
        return np.linspace(self.t_start, self.t_end, self.num_points)


@dataclass(frozen=True)
class Trace:
    """Log values of one quantity: NaN where undefined, -inf where exactly zero."""

    quantity: str
    times: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class LimitClass:
    label: Limit
    slope: float = math.nan
    oscillation: float = math.nan
    tail_mean: float = math.nan  # log of the mean of the tail values
    value: float = None
    note: str = ""

    @property
    def evidence(self):
        return (self.slope, self.oscillation, self.tail_mean)

    def to_dict(self):
        return {"label": self.label.value, "slope": self.slope, "oscillation": self.oscillation,
                "tail_mean": self.tail_mean, "value": self.value, "note": self.note}


def parse_quantity(q, n):
    """``"tau"`` -> ("tau", None), ``"kappa_3"`` -> ("kappa", 3)."""
    if q == "tau":
        return "tau", None
    m = re.fullmatch(r"kappa_(\d+)", q)
    if not m:
        raise ValueError(f"unknown quantity {q!r}; expected 'tau' or 'kappa_<i>'")
    i = int(m.group(1))
    if not 1 <= i <= n - 1:
        raise ValueError(f"kappa_{i} needs 1 <= i <= n - 1 = {n - 1}")
    return "kappa", i


def structural_v2_zero(A):
    """Best-effort structural test for ``V_2 = 0``; False if structure is unresolvable."""
    from .spectral_oracle import jordan_structure, summarize, v2_degenerate
    try:
        return v2_degenerate(jordan_structure(A, summarize(A)))
    except IllConditionedSpectrumError:
        return False


@dataclass(frozen=True)
class Profile:
    times: np.ndarray
    log_V: np.ndarray  # (T, k_max + 1)
    log_kappa: np.ndarray  # (T, k_max - 1)
    log_tau: np.ndarray  # (T,)

    def values(self, kind, i):
        return self.log_tau if kind == "tau" else self.log_kappa[:, i - 1]


def profile_trace(A, r0, times, k_max, split=None, structural_zero=False):
    """Volumes, curvatures and torsion of one trajectory along ``times``.

    Grid points where the velocity has numerically vanished are dropped.
    """
    A = as_matrix(A)
    n = A.shape[0]
    r0 = as_vector(r0, n)
    times = np.asarray(times, dtype=float)
    batch = derivative_batch(A, r0, times, k_max, split=split)
    logv = batch_log_volumes(batch)
    kappa, tau = curvature_logs(logv, n, structural_zero)
    ok = ~np.isneginf(logv[:, 1])
    if not ok.any():
        raise EquilibriumError("velocity is zero along the whole grid")
    if not ok.all():
        if ok.sum() < MIN_POINTS:
            raise InsufficientTraceError(f"only {int(ok.sum())} grid points before the trajectory reaches rest")
        times, logv, kappa, tau = times[ok], logv[ok], kappa[ok], tau[ok]
    return Profile(times, logv, kappa, tau)


def default_k_max(n, kind=None, i=None):
    k = min(3, n + 1) if n >= 2 else 2
    if kind == "kappa":
        k = max(k, i + 1)
    return k


def sample_trace(A, r0, quantity, cfg: TraceConfig = TraceConfig()):
    A = as_matrix(A)
    n = A.shape[0]
    kind, i = parse_quantity(quantity, n)
    prof = profile_trace(A, r0, cfg.times(), default_k_max(n, kind, i),
                         structural_zero=kind == "tau" and structural_v2_zero(A))
    return Trace(quantity, prof.times, prof.values(kind, i))


def _classify_window(t, y, cfg):
    fin = np.isfinite(y)
    if not fin.any():
        return LimitClass(Limit.ZERO, note="identically zero")
    if not fin.all():
        return LimitClass(Limit.INCONCLUSIVE, note="tail mixes exact zeros with positive values")
    slope, icpt = np.polyfit(t, y, 1)
    resid = y - (slope * t + icpt)
    rho = float(resid.max() - resid.min())
    mu = float(logsumexp(y) - math.log(len(y)))
    drift = abs(slope) * float(t[-1] - t[0])
    ev = dict(slope=float(slope), oscillation=rho, tail_mean=mu)
    if slope < -cfg.slope_tol:
        return LimitClass(Limit.ZERO, **ev)
    if slope > cfg.slope_tol:
        return LimitClass(Limit.INFINITY, **ev)
    # a trend that dominates the wiggle is drift; a fitted slope inside a wiggle is not
    if drift > cfg.oscillation_tol and drift > rho:
        return LimitClass(Limit.INCONCLUSIVE, note="slow drift below the slope tolerance", **ev)
    if rho > cfg.oscillation_tol:
        return LimitClass(Limit.NO_LIMIT_BOUNDED, **ev)
    if mu < ZERO_FLOOR:
        return LimitClass(Limit.ZERO, note="flat tail below the zero floor", **ev)
    return LimitClass(Limit.POSITIVE_CONST, value=math.exp(mu), **ev)


_SETTLED = {Limit.POSITIVE_CONST, Limit.NO_LIMIT_BOUNDED}


def classify_limit(trace: Trace, cfg: TraceConfig = TraceConfig()):
    """Label the t -> infinity behaviour of a trace from its tail."""
    t = np.asarray(trace.times, dtype=float)
    y = np.asarray(trace.values, dtype=float)
    w = max(1, int(math.ceil(cfg.fit_window_fraction * len(t))))
    t, y = t[-w:], y[-w:]
    undefined = np.isnan(y)
    if (~undefined).sum() < MIN_POINTS:
        raise InsufficientTraceError(f"{int((~undefined).sum())} defined tail points, need {MIN_POINTS}")
    if undefined.mean() > UNDEFINED_FRACTION:
        return LimitClass(Limit.INCONCLUSIVE, note=f"{undefined.mean():.0%} of the tail is undefined")
    t, y = t[~undefined], y[~undefined]
    full = _classify_window(t, y, cfg)
    if full.label is Limit.INCONCLUSIVE or len(t) < 2 * MIN_POINTS:
        return full
    late = _classify_window(t[len(t) // 2:], y[len(t) // 2:], cfg)
    if late.label != full.label and not {late.label, full.label} <= _SETTLED:
        return LimitClass(Limit.INCONCLUSIVE, full.slope, full.oscillation, full.tail_mean,
                          note=f"tail windows disagree ({full.label.value} vs {late.label.value})")
    return full


def sample_initial_condition(n, seed, j):
    """Sample ``j`` of a seeded stream: each coordinate in [-1, -1e-3] u [1e-3, 1]."""
    rng = np.random.default_rng([seed, j])
    mag = rng.uniform(1e-3, 1.0, n)
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return sign * mag


def classify_quantities(A, quantities, cfg: TraceConfig, num_samples, seed, workers=None,
                        initial_conditions=None):
    """Labels for several quantities, sharing one trajectory per sampled r0.

    Returns ``{quantity: [LimitClass, ...]}``. Failures for a sample become
    Inconclusive entries carrying the error message.
    """
    A = as_matrix(A)
    n = A.shape[0]
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    parsed = [(q, *parse_quantity(q, n)) for q in quantities]
    k_max = max([default_k_max(n, kind, i) for _, kind, i in parsed] + [default_k_max(n)])
    split = spectral_split(A)
    structural = any(kind == "tau" for _, kind, _ in parsed) and structural_v2_zero(A)
    times = cfg.times()

    def one(j):
        r0 = (initial_conditions[j] if initial_conditions is not None
              else sample_initial_condition(n, seed, j))
        try:
            prof = profile_trace(A, r0, times, k_max, split=split, structural_zero=structural)
        except (TorsionStabError, OverflowError) as exc:
            bad = LimitClass(Limit.INCONCLUSIVE, note=f"{type(exc).__name__}: {exc}")
            return {q: bad for q, _, _ in parsed}
        out = {}
        for q, kind, i in parsed:
            try:
                out[q] = classify_limit(Trace(q, prof.times, prof.values(kind, i)), cfg)
            except InsufficientTraceError as exc:
                out[q] = LimitClass(Limit.INCONCLUSIVE, note=f"InsufficientTraceError: {exc}")
        return out

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            per = list(ex.map(one, range(num_samples)))
    else:
        per = [one(j) for j in range(num_samples)]
    return {q: [p[q] for p in per] for q, _, _ in parsed}


def classify_over_samples(A, quantity, cfg: TraceConfig = TraceConfig(), num_samples=32, seed=42, workers=None):
    return classify_quantities(A, [quantity], cfg, num_samples, seed, workers)[quantity]
