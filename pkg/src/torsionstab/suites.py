"""Seeded verification suites shared by the CLI and the test-suite."""

from collections import Counter
from dataclasses import dataclass
import math
import time

import numpy as np

from . import catalog
from .asymptotics import (TraceConfig, classify_limit, classify_quantities, profile_trace,
                          sample_initial_condition, sample_trace)
from .discriminance import SINGULAR_NOTE, curvature_verdict, reconcile, torsion_verdict
from .geometry import batch_log_volumes, curvature_logs, log_volumes, volume_minor_sum
from .linalg import derivative_batch, derivative_stack, eigenvalues, mat_exp
from .results import Limit, Verdict
from .spectral_oracle import (classify_eigen_stability, jordan_structure, predict_kappa_limit_diagonal,
                              summarize, v2_degenerate)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.2f}s)"


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        c = fn(*args, **kwargs)
        c.seconds = time.perf_counter() - t0
        return c
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _tau_at(A, r0, times):
    prof = profile_trace(A, r0, np.atleast_1d(times), 3)
    return np.exp(prof.log_tau)


@_timed
def check_oscillator(seed=42):
    """Oscillator torsion against its closed form, its limit label and verdict."""
    ex = catalog.EXAMPLES["paper2"]
    t0 = time.perf_counter()
    t = np.linspace(0.0, 10.0, 101)
    tau2 = _tau_at(ex.A, ex.r0, t) ** 2
    ref = catalog.oscillator_tau_squared(t)
    err = float(np.max(np.abs(tau2 - ref) / np.abs(ref)))
    elapsed = time.perf_counter() - t0
    label = classify_limit(sample_trace(ex.A, ex.r0, "tau"), TraceConfig())
    s = summarize(ex.A)
    verdict = torsion_verdict(ex.A, [label], s).verdict
    oracle = classify_eigen_stability(s).verdict
    ok = (err <= 1e-8 and elapsed < 1.0 and label.label is Limit.NO_LIMIT_BOUNDED
          and verdict is Verdict.STABLE and oracle is Verdict.STABLE)
    return Check("oscillator closed form", ok,
                 f"max rel err {err:.3g} in {elapsed:.3f}s, label {label.label}, verdict {verdict}, oracle {oracle}")


@_timed
def check_example1(seed=42):
    """Diagonalizable 4x4 example: curvature labels, verdict, eigenvalue product."""
    ex = catalog.EXAMPLES["paper1"]
    labels = classify_quantities(ex.A, ["kappa_1", "tau", "kappa_3"], TraceConfig(), 1, seed,
                                 initial_conditions=[ex.r0])
    got = {q: v[0].label for q, v in labels.items()}
    want = {"kappa_1": Limit.ZERO, "tau": Limit.ZERO, "kappa_3": Limit.INFINITY}
    s = summarize(ex.A)
    verdict = curvature_verdict(ex.A, 3, labels["kappa_3"], s, s.diagonalizable_real).verdict
    oracle = classify_eigen_stability(s).verdict
    prod = np.prod(eigenvalues(ex.A)).real
    rel = abs(prod - 1320.0) / 1320.0
    ok = (got == want and verdict is Verdict.ASYMPTOTICALLY_STABLE and oracle is Verdict.ASYMPTOTICALLY_STABLE
          and rel <= 1e-6)
    lab = ", ".join(f"{q} {v}" for q, v in got.items())
    return Check("example 1 curvature path", ok,
                 f"{lab}; verdict {verdict}, oracle {oracle}; eigenvalue product {prod:.10g}")


@_timed
def check_trichotomy(seed=42, count=200):
    """Curvature limits of random diagonal systems against the exponent comparison."""
    rng = np.random.default_rng(seed)
    agree = total = inconclusive = contradictory = 0
    examples = []
    for m in range(count):
        A = catalog.random_diagonal(rng)
        n = A.shape[0]
        s = summarize(A)
        res = classify_quantities(A, [f"kappa_{i}" for i in range(1, n)], TraceConfig(), 1, seed + m)
        for i in range(1, n):
            pred = predict_kappa_limit_diagonal(s, i).label
            got = res[f"kappa_{i}"][0].label
            total += 1
            if got is pred:
                agree += 1
            elif got is Limit.INCONCLUSIVE:
                inconclusive += 1
            else:
                contradictory += 1
                if len(examples) < 3:
                    examples.append(f"diag{tuple(np.round(np.diag(A), 3))} i={i}: {got} vs {pred}")
    ok = agree >= 0.98 * total and contradictory == 0
    detail = f"{agree}/{total} agree, {inconclusive} inconclusive, {contradictory} contradictory"
    if examples:
        detail += "; " + "; ".join(examples)
    return Check("diagonal trichotomy", ok, detail)


@_timed
def check_lemma46(seed=42):
    """Two critical rotations with distinct frequencies: torsion tends to a known constant."""
    ex = catalog.EXAMPLES["lemma46"]
    want = math.sqrt(36.0 / 425.0)
    got = float(_tau_at(ex.A, ex.r0, 1000.0)[0])
    rel = abs(got - want) / want
    return Check("critical rotations torsion constant", rel <= 1e-4,
                 f"tau(1000) = {got:.10g}, expected {want:.10g}, rel err {rel:.3g}")


@_timed
def check_positive_abscissa(seed=42, count=50):
    """Canonical forms with an unstable block: torsion tends to zero."""
    rng = np.random.default_rng(seed)
    c = Counter()
    for m in range(count):
        A = catalog.random_unstable_canonical(rng)
        lab = classify_quantities(A, ["tau"], TraceConfig(), 1, seed + m)["tau"][0]
        c[lab.label] += 1
    other = sum(v for k, v in c.items() if k not in (Limit.ZERO, Limit.INCONCLUSIVE))
    ok = other == 0 and c[Limit.INCONCLUSIVE] <= 1
    return Check("unstable block forces zero torsion", ok,
                 ", ".join(f"{k.value} {v}" for k, v in sorted(c.items())))


@_timed
def check_critical_rotation(seed=42, count=20):
    """Critical rotation blocks of order >= 2 with stable remainder: torsion tends to zero."""
    rng = np.random.default_rng(seed + 1)
    c = Counter()
    for m in range(count):
        A = catalog.random_critical_rotation(rng)
        lab = classify_quantities(A, ["tau"], TraceConfig(), 1, seed + m)["tau"][0]
        c[lab.label] += 1
    ok = c[Limit.ZERO] == count
    return Check("repeated critical rotation forces zero torsion", ok,
                 ", ".join(f"{k.value} {v}" for k, v in sorted(c.items())))


@_timed
def check_singular_counterexamples(seed=42):
    """Singular systems where the torsion limit says nothing about stability."""
    r1, r2 = catalog.EXAMPLES["remark1"], catalog.EXAMPLES["remark2"]
    tau50 = float(_tau_at(r1.A, r1.r0, 50.0)[0])
    want = 1.0 / abs(r1.r0[1])
    rep1 = reconcile(r1.A, seed=seed)
    ok1 = (abs(tau50 - want) <= 1e-6 and rep1.geometric.verdict is Verdict.INCONCLUSIVE
           and SINGULAR_NOTE in rep1.geometric.notes and rep1.oracle.verdict is Verdict.UNSTABLE)
    lab2 = classify_limit(sample_trace(r2.A, r2.r0, "tau"), TraceConfig()).label
    rep2 = reconcile(r2.A, seed=seed)
    ok2 = (lab2 is Limit.INFINITY and rep2.geometric.verdict is Verdict.INCONCLUSIVE
           and SINGULAR_NOTE in rep2.geometric.notes and rep2.oracle.verdict is Verdict.STABLE)
    return Check("singular counterexamples", ok1 and ok2,
                 f"remark1 tau(50) = {tau50:.10g}, verdict {rep1.geometric.verdict}, oracle {rep1.oracle.verdict}; "
                 f"remark2 tau {lab2}, verdict {rep2.geometric.verdict}, oracle {rep2.oracle.verdict}")


@_timed
def check_v2_degeneracy(seed=42, samples=20, count=20):
    """Structural V_2 = 0 families, and eventual positivity of V_2 elsewhere."""
    times = TraceConfig().times()
    bad = []
    for name, A in (("3I4", 3.0 * np.eye(4)),
                    ("J2(0)+J2(0)", catalog.assemble([("J", 0.0, 2), ("J", 0.0, 2)]))):
        if not v2_degenerate(jordan_structure(A)):
            bad.append(f"{name} not flagged")
        for j in range(samples):
            r0 = sample_initial_condition(4, seed, j)
            lv = batch_log_volumes(derivative_batch(A, r0, times, 2))
            if not np.all(np.isneginf(lv[:, 2])):
                bad.append(f"{name} sample {j} has V2 > 0")
                break
    rng = np.random.default_rng(seed + 2)
    done = 0
    while done < count:
        A = catalog.random_canonical(rng)
        if v2_degenerate(jordan_structure(A)):
            continue
        r0 = sample_initial_condition(A.shape[0], seed, done)
        lv = batch_log_volumes(derivative_batch(A, r0, times, 2))
        late = lv[times > 50.0, 2]
        if not np.all(np.isfinite(late)):
            bad.append(f"V2 not positive late for blocks of size {A.shape[0]}")
        done += 1
    return Check("V2 degeneracy", not bad, "; ".join(bad) if bad else
                 f"both structural families zero on {samples} samples; {count} generic forms positive for t > 50")


def _rel_frob(X, Y):
    return np.linalg.norm(X - Y) / max(np.linalg.norm(Y), np.finfo(float).tiny)


@_timed
def check_properties(seed=42):
    """Minor-sum volumes, semigroup law, scaling laws, similarity invariance of labels."""
    rng = np.random.default_rng(seed)
    worst_cb = 0.0
    for _ in range(500):
        n = int(rng.integers(1, 6))
        A = rng.uniform(-2, 2, (n, n))
        r0 = rng.uniform(-1, 1, n)
        t = rng.uniform(0, 3)
        k = int(rng.integers(1, min(3, n) + 1))
        st = derivative_stack(A, r0, t, k)
        a, b = log_volumes(st, k)[k], volume_minor_sum(st, k)
        Va, Vb = a.value, b.value
        worst_cb = max(worst_cb, abs(Va - Vb) / (1.0 + Vb))

    worst_sg = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 6))
        A = rng.uniform(-2, 2, (n, n))
        s, t = rng.uniform(0, 3, 2)
        worst_sg = max(worst_sg, _rel_frob(mat_exp(A, s) @ mat_exp(A, t), mat_exp(A, s + t)))

    worst_sc = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 6))
        A = rng.uniform(-2, 2, (n, n))
        r0 = rng.uniform(-1, 1, n)
        t = rng.uniform(0, 3)
        k = min(n + 1, 4)
        base = derivative_batch(A, r0, [t], k)
        lv0 = batch_log_volumes(base)[0]
        ka0, _ = curvature_logs(lv0[None], n)
        for c in (0.1, 10.0, 3.7):
            lv = batch_log_volumes(derivative_batch(A, c * r0, [t], k))[0]
            ka, _ = curvature_logs(lv[None], n)
            fin = np.isfinite(lv0)
            dv = np.abs(lv[fin] - lv0[fin] - np.arange(k + 1)[fin] * math.log(c))
            fk = np.isfinite(ka0[0])
            dk = np.abs(ka[0][fk] - ka0[0][fk] + math.log(c))
            worst_sc = max(worst_sc, dv.max(initial=0.0), dk.max(initial=0.0))

    mismatched = 0
    compared = 0
    for j in range(20):
        A = catalog.random_diagonal(rng, n_range=(3, 5))
        n = A.shape[0]
        while True:
            P = rng.normal(size=(n, n))
            if np.linalg.cond(P) < 100:
                break
        B = P @ A @ np.linalg.inv(P)
        r0 = sample_initial_condition(n, seed, j)
        qs = [f"kappa_{i}" for i in range(1, n)]
        la = classify_quantities(A, qs, TraceConfig(), 1, seed, initial_conditions=[r0])
        lb = classify_quantities(B, qs, TraceConfig(), 1, seed, initial_conditions=[P @ r0])
        for q in qs:
            x, y = la[q][0].label, lb[q][0].label
            if x in (Limit.ZERO, Limit.INFINITY) or y in (Limit.ZERO, Limit.INFINITY):
                compared += 1
                mismatched += x is not y

    ok = worst_cb <= 1e-9 and worst_sg <= 1e-9 and worst_sc <= 1e-10 and mismatched == 0
    return Check("property suite", ok,
                 f"minor-sum {worst_cb:.2g}, semigroup {worst_sg:.2g}, scaling {worst_sc:.2g}, "
                 f"similarity {compared - mismatched}/{compared} labels preserved")


SUITES = {
    "trichotomy": [check_trichotomy],
    "lemmas": [check_lemma46, check_positive_abscissa, check_critical_rotation, check_singular_counterexamples,
               check_v2_degeneracy],
    "properties": [check_properties],
    "examples": [check_oscillator, check_example1],
}


def run_suite(name, seed=42):
    if name == "all":
        fns = [f for k in ("examples", "trichotomy", "lemmas", "properties") for f in SUITES[k]]
    else:
        fns = SUITES[name]
    return [f(seed=seed) for f in fns]


@dataclass
class Expectation:
    quantity: str
    expected: object
    observed: object
    passed: bool


def _close(got, want, rtol):
    return got is not None and abs(got - want) <= rtol * abs(want)


def example_report(name, seed=42):
    """Expected-versus-observed lines for one built-in example."""
    ex = catalog.EXAMPLES[name]
    A, r0 = ex.A, ex.r0
    s = summarize(A)
    oracle = classify_eigen_stability(s).verdict
    rows = []
    if name == "paper1":
        prod = float(np.prod(eigenvalues(A)).real)
        rows.append(Expectation("eigenvalue product", 1320.0, prod, _close(prod, 1320.0, 1e-6)))
        labels = classify_quantities(A, ["kappa_1", "tau", "kappa_3"], TraceConfig(), 1, seed, initial_conditions=[r0])
        for q, want in (("kappa_1", Limit.ZERO), ("tau", Limit.ZERO), ("kappa_3", Limit.INFINITY)):
            got = labels[q][0].label
            rows.append(Expectation(f"{q} limit", want.value, got.value, got is want))
        v = curvature_verdict(A, 3, labels["kappa_3"], s, s.diagonalizable_real).verdict
        rows.append(Expectation("curvature verdict", Verdict.ASYMPTOTICALLY_STABLE.value, v.value,
                                v is Verdict.ASYMPTOTICALLY_STABLE))
    elif name == "paper2":
        t = np.linspace(0.0, 10.0, 101)
        tau2 = _tau_at(A, r0, t) ** 2
        rows.append(Expectation("tau^2(0)", 19.0 / 162.0, float(tau2[0]), _close(float(tau2[0]), 19.0 / 162.0, 1e-8)))
        err = float(np.max(np.abs(tau2 / catalog.oscillator_tau_squared(t) - 1.0)))
        rows.append(Expectation("max rel err of tau^2 on [0, 10]", "<= 1e-08", err, err <= 1e-8))
        lab = classify_limit(sample_trace(A, r0, "tau"), TraceConfig()).label
        rows.append(Expectation("tau limit", Limit.NO_LIMIT_BOUNDED.value, lab.value, lab is Limit.NO_LIMIT_BOUNDED))
        v = torsion_verdict(A, [lab], s).verdict
        rows.append(Expectation("torsion verdict", Verdict.STABLE.value, v.value, v is Verdict.STABLE))
    elif name in ("remark1", "remark2"):
        if name == "remark1":
            tau50 = float(_tau_at(A, r0, 50.0)[0])
            want = 1.0 / abs(r0[1])
            rows.append(Expectation("tau(50)", want, tau50, abs(tau50 - want) <= 1e-6))
        else:
            lab = classify_limit(sample_trace(A, r0, "tau"), TraceConfig()).label
            rows.append(Expectation("tau limit", Limit.INFINITY.value, lab.value, lab is Limit.INFINITY))
        rep = reconcile(A, seed=seed)
        g = rep.geometric
        rows.append(Expectation("geometric verdict", "Inconclusive (det A = 0)", f"{g.verdict.value} {list(g.notes)}",
                                g.verdict is Verdict.INCONCLUSIVE and SINGULAR_NOTE in g.notes))
        want_o = Verdict.UNSTABLE if name == "remark1" else Verdict.STABLE
        rows.append(Expectation("oracle verdict", want_o.value, oracle.value, oracle is want_o))
    elif name == "lemma46":
        want = math.sqrt(36.0 / 425.0)
        got = float(_tau_at(A, r0, 1000.0)[0])
        rows.append(Expectation("tau(1000)", want, got, _close(got, want, 1e-4)))
    else:
        raise KeyError(name)
    return rows
