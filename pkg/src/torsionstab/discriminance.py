"""Stability verdicts from curvature and torsion limits, checked against eigenvalues."""

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import TraceConfig, classify_quantities, sample_initial_condition
from .errors import IllConditionedSpectrumError, PreconditionError, TorsionStabError
from .linalg import as_matrix
from .results import Limit, Provenance, StabilityVerdict, Verdict
from .spectral_oracle import (classify_eigen_stability, jordan_structure, predict_kappa_limit_diagonal,
                              predict_tau_limit, summarize)

CONSENSUS = 0.8
SINGULAR_NOTE = "det A = 0: torsion theorem inapplicable (the invertible hypothesis cannot be removed)"
SUFFICIENT_NOTE = "limit zero: the theorem gives sufficient conditions only"
HYPOTHESIS_NOTE = "curvature theorem hypothesis not met: A is not diagonalizable over the reals"

_NONZERO = {Limit.POSITIVE_CONST, Limit.NO_LIMIT_BOUNDED, Limit.INFINITY}


def _labels(labels):
    out = [getattr(x, "label", x) for x in labels]
    if not out:
        raise PreconditionError("no limit labels given")
    return [Limit(x) for x in out]


def _share(labels, accepted):
    return sum(x in accepted for x in labels) / len(labels)


def torsion_verdict(A, labels, s):
    labels = _labels(labels)
    P = Provenance.TORSION
    if not s.invertible:
        return StabilityVerdict(Verdict.INCONCLUSIVE, P, (SINGULAR_NOTE,))
    if _share(labels, {Limit.INFINITY}) >= CONSENSUS:
        return StabilityVerdict(Verdict.ASYMPTOTICALLY_STABLE, P)
    if _share(labels, _NONZERO) >= CONSENSUS:
        return StabilityVerdict(Verdict.STABLE, P)
    if _share(labels, {Limit.ZERO}) >= CONSENSUS:
        return StabilityVerdict(Verdict.INCONCLUSIVE, P, (SUFFICIENT_NOTE,))
    return StabilityVerdict(Verdict.INCONCLUSIVE, P, ("no consensus among sampled limits",))


def curvature_verdict(A, i, labels, s, diagonalizable_real):
    labels = _labels(labels)
    P = Provenance.CURVATURE
    if not diagonalizable_real:
        return StabilityVerdict(Verdict.INCONCLUSIVE, P, (HYPOTHESIS_NOTE,))
    if _share(labels, _NONZERO) >= CONSENSUS:
        v = Verdict.ASYMPTOTICALLY_STABLE if s.invertible else Verdict.STABLE
        return StabilityVerdict(v, P, (f"kappa_{i}",))
    if _share(labels, {Limit.ZERO}) >= CONSENSUS:
        return StabilityVerdict(Verdict.INCONCLUSIVE, P, (f"kappa_{i}", SUFFICIENT_NOTE))
    return StabilityVerdict(Verdict.INCONCLUSIVE, P, (f"kappa_{i}", "no consensus among sampled limits"))


_STRENGTH = {Verdict.INCONCLUSIVE: 0, Verdict.STABLE: 1, Verdict.ASYMPTOTICALLY_STABLE: 2}


def contradicts(geometric: Verdict, oracle: Verdict):
    if geometric is Verdict.INCONCLUSIVE:
        return False
    if geometric is Verdict.ASYMPTOTICALLY_STABLE:
        return oracle is not Verdict.ASYMPTOTICALLY_STABLE
    if geometric is Verdict.STABLE:
        return oracle is Verdict.UNSTABLE
    return oracle is not Verdict.UNSTABLE


@dataclass
class ReconciliationReport:
    geometric: StabilityVerdict
    oracle: StabilityVerdict
    consistent: bool
    per_quantity: dict  # quantity -> StabilityVerdict
    histograms: dict  # quantity -> {label: count}
    predictions: dict  # quantity -> LimitPrediction (first sample for torsion)
    agreement: dict  # quantity -> (agreeing samples, compared samples)
    summary: object = None
    structure: object = None
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "geometric": self.geometric.to_dict(),
            "oracle": self.oracle.to_dict(),
            "consistent": self.consistent,
            "per_quantity": {q: v.to_dict() for q, v in self.per_quantity.items()},
            "histograms": self.histograms,
            "predictions": {q: p.to_dict() for q, p in self.predictions.items()},
            "agreement": {q: list(a) for q, a in self.agreement.items()},
            "spectral_summary": self.summary.to_dict() if self.summary else None,
            "jordan_structure": self.structure.to_dict() if self.structure else None,
            "notes": list(self.notes),
        }


def reconcile(A, cfg: TraceConfig = TraceConfig(), num_samples=32, seed=42, quantities=None, workers=None):
    """Run both geometric theorems and the eigenvalue oracle on ``A`` and compare."""
    A = as_matrix(A)
    n = A.shape[0]
    notes = []
    s = summarize(A)
    notes.extend(s.notes)
    oracle = classify_eigen_stability(s)
    try:
        j = jordan_structure(A, s)
    except IllConditionedSpectrumError as exc:
        j = None
        notes.append(f"jordan structure unavailable: {exc}")
    diag_real = s.diagonalizable_real if j is None else (
        not j.complex_blocks and all(p == 1 for _, sizes in j.real_blocks for p in sizes))

    if quantities is None:
        quantities = (["tau"] if n >= 3 else []) + [f"kappa_{i}" for i in range(1, n)]
    quantities = list(quantities)
    labels = {}
    if quantities:
        try:
            labels = classify_quantities(A, quantities, cfg, num_samples, seed, workers)
        except TorsionStabError as exc:
            notes.append(f"sampling failed: {exc}")
    else:
        notes.append("no curvature or torsion defined for n < 2")

    per_q, hist, preds, agree = {}, {}, {}, {}
    for q, ls in labels.items():
        hist[q] = dict(Counter(c.label.value for c in ls))
        if q == "tau":
            per_q[q] = torsion_verdict(A, ls, s)
            pred = None
            if j is not None:
                try:
                    pred = predict_tau_limit(A, s, j, sample_initial_condition(n, seed, 0))
                except (PreconditionError, TorsionStabError) as exc:
                    notes.append(f"tau prediction unavailable: {exc}")
        else:
            i = int(q.split("_")[1])
            per_q[q] = curvature_verdict(A, i, ls, s, diag_real)
            pred = predict_kappa_limit_diagonal(s, i)
        if pred is not None:
            preds[q] = pred
            if pred.applicable and pred.label is not Limit.NOT_PREDICTED:
                agree[q] = (sum(c.label is pred.label for c in ls), len(ls))

    geometric = StabilityVerdict(Verdict.INCONCLUSIVE, Provenance.TORSION if n >= 3 else Provenance.CURVATURE,
                                 ("no geometric quantity reached a verdict",))
    for q, v in per_q.items():
        if _STRENGTH[v.verdict] > _STRENGTH[geometric.verdict]:
            geometric = v
    if geometric.verdict is Verdict.INCONCLUSIVE:
        # carry the gating notes so the report explains why
        gate = [nt for v in per_q.values() for nt in v.notes if nt in (SINGULAR_NOTE, HYPOTHESIS_NOTE)]
        if gate:
            geometric = StabilityVerdict(Verdict.INCONCLUSIVE, geometric.provenance, tuple(dict.fromkeys(gate)))
    consistent = not any(contradicts(v.verdict, oracle.verdict) for v in per_q.values())
    return ReconciliationReport(geometric, oracle, consistent, per_q, hist, preds, agree, s, j, notes)
