"""Command-line front end: ``torsionstab {analyze,trace,examples,verify}``."""

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import catalog, suites
from .asymptotics import TraceConfig, default_k_max, parse_quantity, profile_trace, structural_v2_zero
from .discriminance import reconcile
from .errors import TorsionStabError

EXIT_OK, EXIT_INPUT, EXIT_FAIL = 0, 1, 2
DEFAULT_SEED = 42


class InputError(Exception):
    pass


def _pos(text, needle):
    """1-based (line, column) of the first ``needle`` in ``text``, or (1, 1)."""
    i = text.find(needle)
    if i < 0:
        return 1, 1
    line = text.count("\n", 0, i) + 1
    col = i - (text.rfind("\n", 0, i) + 1) + 1
    return line, col


def parse_matrix_document(text, source="<input>"):
    """Parse ``{"n": int, "rows": [[...], ...], "label": optional}``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None

    def fail(msg, key="rows"):
        line, col = _pos(text, f'"{key}"')
        raise InputError(f"{source}:{line}:{col}: {msg}")

    if not isinstance(doc, dict):
        raise InputError(f"{source}:1:1: expected a JSON object")
    n = doc.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        fail("'n' must be a positive integer", "n")
    rows = doc.get("rows")
    if not isinstance(rows, list) or len(rows) != n:
        fail(f"'rows' must be a list of {n} rows")
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            fail(f"rows[{i}] must have {n} entries")
        for j, x in enumerate(row):
            if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
                fail(f"rows[{i}][{j}] must be a finite number")
    label = doc.get("label")
    if label is not None and not isinstance(label, str):
        fail("'label' must be a string", "label")
    return np.array(rows, dtype=float), label


def read_matrix_document(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    return parse_matrix_document(text, path)


def _g(x):
    x = float(x)
    if x == 0.0 and math.copysign(1.0, x) < 0:
        return "-0.0"  # "-0" would read back as the integer 0
    return format(x, ".17g")


def format_matrix_document(A, label=None):
    A = np.asarray(A, dtype=float)
    rows = ",\n    ".join("[" + ", ".join(_g(x) for x in row) + "]" for row in A)
    out = '{\n  "n": %d,\n  "rows": [\n    %s\n  ]' % (A.shape[0], rows)
    if label is not None:
        out += ",\n  \"label\": " + json.dumps(label)
    return out + "\n}\n"


def write_matrix_document(path, A, label=None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_matrix_document(A, label))


def dump_json(obj, indent=0):
    """JSON with every float written to 17 significant digits; non-finite floats become null."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (float, np.floating)):
        return _g(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dump_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        return "[" + ", ".join(dump_json(v, indent + 1) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _h(x):
    """Human-readable number, 6 significant digits."""
    if x is None:
        return "-"
    return format(float(x), ".6g")


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("TORSIONSTAB_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise InputError(f"TORSIONSTAB_SEED must be an integer, got {env!r}") from None
    return DEFAULT_SEED


def _config(args):
    try:
        return TraceConfig(t_start=args.t_start, t_end=args.t_end, num_points=args.points, grid=args.grid)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _report_text(A, label, rep):
    s = rep.summary
    lines = [f"system: {label or 'unnamed'} (n = {A.shape[0]})", "", "spectral summary"]
    lines.append("  eigenvalues: " + ", ".join(
        _h(z.real) if z.imag == 0 else f"{_h(z.real)}{'+' if z.imag > 0 else '-'}{_h(abs(z.imag))}i" for z in s.eigs))
    lines.append(f"  M = {_h(s.M)}, N = {_h(s.N)}, invertible = {s.invertible}, "
                 f"semisimple critical = {s.semisimple_critical}, diagonalizable real = {s.diagonalizable_real}")
    if s.lambda_order:
        lines.append("  ordered nonzero eigenvalues: " + ", ".join(_h(x) for x in s.lambda_order))
    lines.append("jordan structure")
    if rep.structure is None:
        lines.append("  ill-conditioned spectrum: structure not resolved")
    else:
        for lam, sizes in rep.structure.real_blocks:
            lines.append(f"  J({_h(lam)}) sizes {list(sizes)}")
        for a, b, sizes in rep.structure.complex_blocks:
            lines.append(f"  C({_h(a)}, {_h(b)}) sizes {list(sizes)}")
    lines.append("limit labels")
    if not rep.histograms:
        lines.append("  none (no torsion for n < 3, no curvature for n < 2)")
    for q, h in rep.histograms.items():
        counts = ", ".join(f"{k} {v}" for k, v in sorted(h.items()))
        pred = rep.predictions.get(q)
        extra = f"; predicted {pred.label.value}" if pred and pred.label.value != "NotPredicted" else ""
        if pred and pred.value is not None:
            extra += f" ({_h(pred.value)})"
        lines.append(f"  {q}: {counts}{extra}")
    lines.append("verdicts")
    for q, v in rep.per_quantity.items():
        lines.append(f"  {q}: {v.verdict.value} [{v.provenance.value}]"
                     + (f" ({'; '.join(v.notes)})" if v.notes else ""))
    g = rep.geometric
    lines.append(f"  geometric: {g.verdict.value} [{g.provenance.value}]" + (f" ({'; '.join(g.notes)})" if g.notes else ""))
    lines.append(f"  oracle: {rep.oracle.verdict.value} [{rep.oracle.provenance.value}]")
    lines.append(f"consistent: {rep.consistent}")
    for nt in rep.notes:
        lines.append(f"note: {nt}")
    return "\n".join(lines) + "\n"


def cmd_analyze(args):
    A, label = read_matrix_document(args.matrix)
    cfg = _config(args)
    quantities = args.quantity or None
    if quantities:
        for q in quantities:
            try:
                parse_quantity(q, A.shape[0])
            except ValueError as exc:
                raise InputError(str(exc)) from None
    rep = reconcile(A, cfg, num_samples=args.samples, seed=_seed(args), quantities=quantities)
    sys.stdout.write(_report_text(A, label, rep))
    if args.out:
        doc = {"label": label, "n": A.shape[0], **rep.to_dict()}
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(dump_json(doc) + "\n")
    return EXIT_OK if rep.consistent else EXIT_FAIL


def _parse_r0(text, n):
    try:
        r0 = np.array([float(x) for x in text.replace(" ", "").split(",") if x != ""])
    except ValueError:
        raise InputError(f"--r0 must be comma-separated numbers, got {text!r}") from None
    if r0.shape != (n,):
        raise InputError(f"--r0 has {r0.size} entries but the matrix is {n} x {n}")
    if not np.all(np.isfinite(r0)):
        raise InputError("--r0 entries must be finite")
    return r0


def trace_table(A, r0, times, k_max=None):
    """Rows ``[t, logV1..logVk, kappa_1..kappa_{k-1}, tau]``; None marks an empty cell."""
    n = A.shape[0]
    k_max = n if k_max is None else k_max
    prof = profile_trace(A, r0, times, max(k_max, 1), structural_zero=structural_v2_zero(A))
    header = (["t"] + [f"logV{k}" for k in range(1, k_max + 1)]
              + [f"kappa_{i}" for i in range(1, k_max)] + ["tau"])
    rows = []
    for j, t in enumerate(prof.times):
        row = [t] + list(prof.log_V[j, 1:k_max + 1])
        row += [None if np.isnan(x) else math.exp(x) for x in prof.log_kappa[j, :k_max - 1]]
        x = prof.log_tau[j]
        row.append(None if np.isnan(x) else math.exp(x))
        rows.append(row)
    return header, rows


def _cell(x):
    if x is None:
        return ""
    if x == -math.inf:
        return "-inf"
    return _g(x)


def cmd_trace(args):
    A, _ = read_matrix_document(args.matrix)
    n = A.shape[0]
    if args.r0 is None:
        raise InputError("--r0 is required")
    r0 = _parse_r0(args.r0, n)
    if not args.allow_degenerate and np.any(r0 == 0):
        raise InputError("--r0 has a zero coordinate; pass --allow-degenerate to accept it")
    k_max = n
    if args.quantity:
        if len(args.quantity) != 1:
            raise InputError("trace takes a single --quantity")
        try:
            kind, i = parse_quantity(args.quantity[0], n)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        k_max = max(n, default_k_max(n, kind, i))
    k_max = min(k_max, n + 1)
    if args.grid == "geometric":
        if not 0 < args.t_start < args.t_end:
            raise InputError("geometric grid needs 0 < --t-start < --t-end")
        times = np.geomspace(args.t_start, args.t_end, args.points)
    else:
        if not 0 <= args.t_start < args.t_end:
            raise InputError("linear grid needs 0 <= --t-start < --t-end")
        times = np.linspace(args.t_start, args.t_end, args.points)
    if args.points < 2:
        raise InputError("--points must be >= 2")
    header, rows = trace_table(A, r0, times, k_max)
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(x) for x in row])
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def cmd_examples(args):
    name = args.name
    if name not in catalog.EXAMPLES:
        raise InputError(f"unknown example {name!r}; valid names: {', '.join(catalog.EXAMPLES)}")
    ex = catalog.EXAMPLES[name]
    print(f"{name}: {ex.label}")
    print(f"  r0 = ({', '.join(_h(x) for x in ex.r0)})")
    ok = True
    for e in suites.example_report(name, seed=_seed(args)):
        exp = _h(e.expected) if isinstance(e.expected, float) else e.expected
        obs = _h(e.observed) if isinstance(e.observed, float) else e.observed
        print(f"  [{'PASS' if e.passed else 'FAIL'}] {e.quantity}: expected {exp}, observed {obs}")
        ok &= e.passed
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(args):
    if args.suite not in ("trichotomy", "lemmas", "properties", "all"):
        raise InputError(f"unknown suite {args.suite!r}; valid: trichotomy, lemmas, properties, all")
    checks = suites.run_suite(args.suite, seed=_seed(args))
    for c in checks:
        print(c.line())
    passed = sum(c.passed for c in checks)
    print(f"{passed}/{len(checks)} checks passed")
    return EXIT_OK if passed == len(checks) else EXIT_FAIL


def _trace_flags(p):
    p.add_argument("--t-start", type=float, default=1.0)
    p.add_argument("--t-end", type=float, default=60.0)
    p.add_argument("--points", type=int, default=256)
    p.add_argument("--grid", choices=("geometric", "linear"), default="geometric")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="torsionstab", description="Stability of x' = Ax from trajectory curvature and torsion.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="spectral summary, limit labels and verdicts for a matrix file")
    a.add_argument("matrix")
    _trace_flags(a)
    a.add_argument("--samples", type=int, default=32)
    a.add_argument("--seed", type=int, default=None)
    a.add_argument("--quantity", action="append", help="tau or kappa_<i>; repeatable (default: all)")
    a.add_argument("--out", help="write the JSON report here")
    a.set_defaults(func=cmd_analyze)

    t = sub.add_parser("trace", help="CSV of volumes, curvatures and torsion along a time grid")
    t.add_argument("matrix")
    t.add_argument("--r0", required=False)
    t.add_argument("--quantity", action="append")
    t.add_argument("--allow-degenerate", action="store_true")
    _trace_flags(t)
    t.add_argument("--out")
    t.set_defaults(func=cmd_trace)

    e = sub.add_parser("examples", help="reproduce a built-in example")
    e.add_argument("name")
    e.add_argument("--seed", type=int, default=None)
    e.set_defaults(func=cmd_examples)

    v = sub.add_parser("verify", help="run seeded verification suites")
    v.add_argument("--suite", default="all")
    v.add_argument("--seed", type=int, default=None)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "samples", 1) is not None and getattr(args, "samples", 1) < 1:
            raise InputError("--samples must be >= 1")
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (TorsionStabError, ValueError, OverflowError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
