"""Command-line interface: ``logcm <subcommand> ...``.

Exit codes: 0 CM, 1 NOT_CM, 2 UNKNOWN for ``decide``; 0/1 pass/fail for
``selftest``; 3 for malformed input; 4 for precision exhaustion outside a
decision.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction

from . import __version__
from .combinat import stirling_signed, w_eval, harmonic
from .constants import (
    REFERENCE_DIGITS, REFERENCE_TOLERANCE, ConstantTable, constant_table,
)
from .derivatives import (
    derivative_polys, dk_membership, evaluate_rows, g_shifted, nesting_probe,
)
from .exactnum import (
    DEFAULT_BITS, DEFAULT_MAX_BITS, Ball, PrecisionCtx, PrecisionError, ball_str, parse_rational,
)
from .nonneg import Status, decide_cm, verdict_document
from .poly import LogFunction, MPoly, format_mpoly, format_upoly
from .transform import (
    check_gtilde_matches_laplace, forward_laplace_multi, inverse_laplace_multi, matrix_A,
    matrix_A_inverse,
)

EXIT_INPUT = 3
EXIT_PRECISION = 4
EXIT_FOR_STATUS = {Status.CM: 0, Status.NOT_CM: 1, Status.UNKNOWN: 2}
BITS_ENV = "LOGCM_BITS"


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# problem files


@dataclass
class ProblemFile:
    s: int
    n: int
    coeffs: dict  # exponent tuple -> Fraction
    precision_bits: int | None = None
    max_bits: int | None = None

    def log_function(self) -> LogFunction:
        return LogFunction(self.s, self.n, MPoly(self.s, self.coeffs))

    def polynomial(self) -> MPoly:
        return MPoly(self.s, self.coeffs)


def _int_field(doc: dict, key: str, required: bool = True, minimum: int = 0):
    if key not in doc:
        if required:
            raise InputError(f"missing field {key!r}")
        return None
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise InputError(f"field {key!r} must be an integer >= {minimum}")
    return v


def _value(v) -> Fraction:
    if isinstance(v, float):
        raise InputError("coefficient values must be strings or integers, not JSON floats")
    try:
        return parse_rational(v)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad coefficient value {v!r}: {exc}") from None


def parse_problem(doc) -> ProblemFile:
    """Validate a decoded JSON problem document."""
    if not isinstance(doc, dict):
        raise InputError("problem must be a JSON object")
    s = _int_field(doc, "s", minimum=1)
    n = _int_field(doc, "n")
    raw = doc.get("coeffs")
    if not isinstance(raw, list):
        raise InputError("'coeffs' must be a list")
    coeffs: dict = {}
    for i, entry in enumerate(raw):
        if isinstance(entry, dict):
            exps = entry.get("exponent")
            if (not isinstance(exps, list) or len(exps) != s
                    or any(isinstance(e, bool) or not isinstance(e, int) or e < 0 for e in exps)):
                raise InputError(f"coeffs[{i}]: exponent must be {s} non-negative integers")
            if "value" not in entry:
                raise InputError(f"coeffs[{i}]: missing value")
            key = tuple(exps)
            val = _value(entry["value"])
        elif s == 1:
            # univariate shorthand: coefficient list c_0..c_n
            key = (i,)
            val = _value(entry)
        else:
            raise InputError(f"coeffs[{i}] must be an object with exponent and value")
        if sum(key) > n:
            raise InputError(f"coeffs[{i}]: exponent {list(key)} has degree above n = {n}")
        if key in coeffs:
            raise InputError(f"duplicate exponent {list(key)}")
        coeffs[key] = val
    prec = _int_field(doc, "precision_bits", required=False, minimum=16)
    mx = _int_field(doc, "max_bits", required=False, minimum=16)
    return ProblemFile(s, n, coeffs, prec, mx)


def load_problem(path: str) -> ProblemFile:
    try:
        if path == "-":
            text = sys.stdin.read()
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from None
    return parse_problem(doc)


# ---------------------------------------------------------------------------
# helpers


def _ctx(args, problem: ProblemFile | None = None) -> PrecisionCtx:
    bits = args.bits
    if bits is None and problem is not None:
        bits = problem.precision_bits
    if bits is None:
        env = os.environ.get(BITS_ENV)
        if env:
            try:
                bits = int(env)
            except ValueError:
                raise InputError(f"{BITS_ENV} must be an integer") from None
    bits = bits or DEFAULT_BITS
    mx = args.max_bits
    if mx is None and problem is not None:
        mx = problem.max_bits
    mx = max(mx or DEFAULT_MAX_BITS, bits)
    if bits < 16:
        raise InputError("--bits must be at least 16")
    return PrecisionCtx(bits, mx)


def _emit(args, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False)


def _names(s: int, base: str) -> list:
    return [base] if s == 1 else [f"{base}{i + 1}" for i in range(s)]


def _ball_terms(p: MPoly) -> list:
    return [{"exponent": list(e), "value": ball_str(c, 40) if isinstance(c, Ball) else str(c)}
            for e, c in p.items()]


def _parse_list(text: str, conv=str) -> list:
    return [conv(t.strip()) for t in text.split(",") if t.strip()]


def _parse_fixed(text: str | None) -> dict:
    out = {}
    if not text:
        return out
    for part in text.split(","):
        if "=" not in part:
            raise InputError(f"--fixed entries look like index=value, got {part!r}")
        k, v = part.split("=", 1)
        out[int(k)] = _value(v.strip())
    return out


def _parse_range(text: str) -> tuple:
    parts = text.split(":") if ":" in text else text.split(",")
    if len(parts) != 2:
        raise InputError(f"range must be lo:hi, got {text!r}")
    lo, hi = (_value(p.strip()) for p in parts)
    if hi < lo:
        raise InputError(f"empty range {text!r}")
    return lo, hi


# ---------------------------------------------------------------------------
# subcommands


def cmd_decide(args) -> int:
    problem = load_problem(args.problem)
    ctx = _ctx(args, problem)
    f = problem.log_function()
    t0 = time.perf_counter()
    verdict = decide_cm(f, ctx)
    doc = verdict_document(f, verdict)
    if args.timing:
        doc["wall_time_s"] = round(time.perf_counter() - t0, 6)
    _emit(args, _dump(doc))
    return EXIT_FOR_STATUS[verdict.status]


def cmd_transform(args) -> int:
    """Forward Laplace transform of q(log t) given as a problem file."""
    problem = load_problem(args.problem)
    ctx = _ctx(args, problem)
    image = forward_laplace_multi(problem.polynomial(), problem.n, ctx)
    doc = {
        "direction": "forward",
        "input": format_mpoly(problem.polynomial(), _names(problem.s, "u")),
        "input_variables": "u_j = log t_j",
        "polynomial": format_mpoly(image, _names(problem.s, "y"), 40),
        "variables": "y_j = log x_j; the transform is this polynomial divided by x_1...x_s",
        "coefficients": _ball_terms(image),
        "precision_bits": ctx.bits,
    }
    _emit(args, _dump(doc))
    return 0


def cmd_inv_laplace(args) -> int:
    problem = load_problem(args.problem)
    ctx = _ctx(args, problem)
    f = problem.log_function()
    q = inverse_laplace_multi(f, ctx)
    doc = {
        "direction": "inverse",
        "input": format_mpoly(f.coeffs, _names(f.s, "y")),
        "input_variables": "f = p(y)/(x_1...x_s) with y_j = log x_j",
        "polynomial": format_mpoly(q, _names(f.s, "u"), 40),
        "variables": "u_j = log t_j",
        "coefficients": _ball_terms(q),
        "precision_bits": ctx.bits,
    }
    _emit(args, _dump(doc))
    return 0


def cmd_derivative(args) -> int:
    problem = load_problem(args.problem)
    if problem.s != 1:
        raise InputError("derivative needs a univariate problem (s = 1)")
    ctx = _ctx(args, problem)
    f = problem.log_function()
    c = f.coefficient_vector()
    k = args.k
    seq = derivative_polys(c, k)
    member = dk_membership(f, k, ctx)
    doc = {
        "k": k,
        "h_k": format_upoly(seq.h[k]),
        "h_k_meaning": "f^(k)(x) = h_k(log x) / x^(k+1)",
        "g_tilde_k": format_upoly(g_shifted(c, k)),
        "in_D_k": member.status is Status.CM,
        "membership": member.to_dict(),
    }
    _emit(args, _dump(doc))
    return 0


def _box(args, n: int) -> dict:
    box = {}
    if args.box:
        for part in args.box.split(";"):
            part = part.strip()
            if not part:
                continue
            if "=" in part:
                idx, rng = part.split("=", 1)
                box[int(idx)] = _parse_range(rng)
            else:
                lo_hi = _parse_range(part)
                box.update({i: lo_hi for i in range(n + 1)})
    return box


def cmd_probe_nesting(args) -> int:
    ctx = _ctx(args)
    fixed = _parse_fixed(args.fixed)
    report = nesting_probe(args.n, args.kmax, args.samples, args.seed, ctx,
                           box=_box(args, args.n), fixed=fixed, with_cm=args.cm,
                           workers=args.workers)
    doc = report.to_dict()
    doc["seed"] = args.seed
    _emit(args, _dump(doc))
    return 0


@dataclass
class RegionScanSpec:
    n: int
    fixed: dict  # index -> Fraction
    x_axis: int
    x_range: tuple
    y_axis: int
    y_range: tuple
    resolution: tuple  # (nx, ny)
    k_values: list = field(default_factory=lambda: [1, 2, 3])
    with_cm: bool = True

    def validate(self) -> None:
        if self.x_axis == self.y_axis:
            raise InputError("the two axes must be distinct coefficients")
        for a in (self.x_axis, self.y_axis):
            if not 0 <= a <= self.n:
                raise InputError(f"axis index {a} outside 0..{self.n}")
            if a in self.fixed:
                raise InputError(f"axis {a} is also fixed")
        if min(self.resolution) < 2:
            raise InputError("grid resolution must be at least 2")
        if any(k < 0 for k in self.k_values):
            raise InputError("k values must be non-negative")

    def points(self) -> list:
        def axis(rng, m):
            lo, hi = rng
            return [lo + (hi - lo) * Fraction(i, m - 1) for i in range(m)]
        xs = axis(self.x_range, self.resolution[0])
        ys = axis(self.y_range, self.resolution[1])
        pts = []
        for yv in ys:  # row-major: y outer, x inner
            for xv in xs:
                c = [self.fixed.get(i, Fraction(0)) for i in range(self.n + 1)]
                c[self.x_axis] = xv
                c[self.y_axis] = yv
                pts.append(c)
        return pts


def _spec_from_args(args) -> RegionScanSpec:
    if args.spec:
        try:
            with open(args.spec, encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read scan spec: {exc}") from None
        try:
            res = doc["resolution"]
            res = (res, res) if isinstance(res, int) else tuple(res)
            spec = RegionScanSpec(
                n=int(doc["n"]),
                fixed={int(k): _value(v) for k, v in doc.get("fixed", {}).items()},
                x_axis=int(doc["x_axis"]), x_range=tuple(_value(v) for v in doc["x_range"]),
                y_axis=int(doc["y_axis"]), y_range=tuple(_value(v) for v in doc["y_range"]),
                resolution=res,
                k_values=_k_list(doc.get("k", [1, 2, 3])),
                with_cm=bool(doc.get("cm", True)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad scan spec: {exc}") from None
    else:
        if args.n is None or args.x_axis is None or args.y_axis is None:
            raise InputError("region-scan needs --spec or --n, --x-axis and --y-axis")
        spec = RegionScanSpec(
            n=args.n, fixed=_parse_fixed(args.fixed),
            x_axis=args.x_axis, x_range=_parse_range(args.x_range),
            y_axis=args.y_axis, y_range=_parse_range(args.y_range),
            resolution=(args.res, args.res),
            k_values=_k_list(args.k), with_cm=not args.no_cm,
        )
    spec.validate()
    return spec


def _k_list(raw) -> list:
    items = _parse_list(raw) if isinstance(raw, str) else list(raw)
    out = []
    for k in items:
        if str(k).lower() in ("inf", "infinity", "oo"):
            out.append(math.inf)
        else:
            try:
                out.append(int(k))
            except ValueError:
                raise InputError(f"bad k value {k!r}") from None
    return out


def _flag(status: Status | None) -> str:
    if status is None:
        return ""
    return {Status.CM: "1", Status.NOT_CM: "0", Status.UNKNOWN: "U"}[status]


def _num(x: Fraction) -> str:
    return repr(float(x))


def region_scan_rows(spec: RegionScanSpec, ctx: PrecisionCtx, workers: int = 1) -> tuple:
    """(header, rows) for a region scan; D_inf is the complete-monotonicity verdict."""
    finite = [k for k in spec.k_values if k != math.inf]
    need_cm = spec.with_cm or math.inf in spec.k_values
    rows = evaluate_rows(spec.points(), finite, need_cm, ctx, workers)
    header = [f"c{spec.x_axis}", f"c{spec.y_axis}"]
    header += ["D_inf" if k == math.inf else f"D_{k}" for k in spec.k_values]
    if spec.with_cm:
        header.append("CM")
    out = []
    for r in rows:
        line = [_num(r.coeffs[spec.x_axis]), _num(r.coeffs[spec.y_axis])]
        line += [_flag(r.cm) if k == math.inf else _flag(r.member[k]) for k in spec.k_values]
        if spec.with_cm:
            line.append(_flag(r.cm))
        out.append(line)
    return header, out, rows


def cmd_region_scan(args) -> int:
    spec = _spec_from_args(args)
    ctx = _ctx(args)
    header, lines, _ = region_scan_rows(spec, ctx, args.workers)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(lines)
    _emit(args, buf.getvalue())
    return 0


def cmd_constants(args) -> int:
    ctx = _ctx(args)
    table = constant_table(args.n, ctx)
    doc = {
        "bits": ctx.bits,
        "gamma": ball_str(table.gamma),
        "zeta": {str(m): ball_str(z) for m, z in table.zeta.items()},
        "g": [ball_str(g) for g in table.g],
        "g_meaning": "g_l = l-th derivative of the Gamma function at 1",
    }
    _emit(args, _dump(doc))
    return 0


# ---------------------------------------------------------------------------
# self test


def _reference_ok(ball: Ball, digits: str) -> bool:
    """The ball meets [ref, ref + 10^-50], which holds the true value."""
    ref = Fraction(digits)
    return ball.lower() <= ref + REFERENCE_TOLERANCE and ball.upper() >= ref


def selftest_items(ctx: PrecisionCtx, table: ConstantTable | None = None) -> list:
    """List of (name, passed, detail)."""
    items = []
    table = table or constant_table(10, ctx)

    bad = [k for k in ["gamma"] + list(range(2, 11))
           if not _reference_ok(table.gamma if k == "gamma" else table.zeta[k], REFERENCE_DIGITS[k])]
    items.append(("constants match 50-digit references", not bad,
                  f"mismatch: {bad}" if bad else "gamma, zeta(2..10)"))

    g_ok = all(a.overlaps(b) for a, b in zip(table.g, matrix_A(len(table.g) - 1, ctx).entries[0]))
    items.append(("Gamma derivatives consistent with the transform matrix", g_ok, ""))

    worst = Fraction(0)
    ok = True
    for n in range(1, 13):
        A, C = matrix_A(n, ctx), matrix_A_inverse(n, ctx)
        P = A.matmul(C)
        for i in range(n + 1):
            for j in range(n + 1):
                if not P[i][j].contains(1 if i == j else 0):
                    ok = False
                if i != j:
                    worst = max(worst, P[i][j].rad)
    ok = ok and worst < Fraction(1, 10**40)
    items.append(("A*C encloses the identity for n <= 12", ok, f"max off-diagonal radius {float(worst):.3g}"))

    sw_ok = True
    for n in range(13):
        H = [harmonic(n, i) for i in range(1, n + 1)]
        for k in range(n + 1):
            lhs = Fraction(stirling_signed(n + 1, k + 1), math.factorial(n))
            rhs = (-1) ** (n + k) * w_eval(k, H, one=Fraction(1)) / math.factorial(k)
            sw_ok = sw_ok and lhs == rhs
    items.append(("Stirling numbers agree with w(k) at harmonic numbers", sw_ok, "0 <= k <= n <= 12"))

    cases = [[1, 0, 1], [0, 1], [2, -3, 1, Fraction(1, 2)], [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1]]
    gt_ok = True
    for c in cases:
        good, defect = check_gtilde_matches_laplace([Fraction(x) for x in c], ctx)
        gt_ok = gt_ok and good and defect < Fraction(1, 10**30)
    items.append(("infinite-order derivative polynomial matches the inverse transform", gt_ok, ""))

    checks = [((2, 0, 1), Status.CM), ((1, 0, 1), Status.NOT_CM), ((0, 1, 0), Status.NOT_CM),
              ((1,), Status.CM)]
    d_ok = all(decide_cm(LogFunction.univariate(c), ctx).status is s for c, s in checks)
    items.append(("reference decisions", d_ok, ""))
    return items


def run_selftest(ctx: PrecisionCtx, table: ConstantTable | None = None, stream=None) -> int:
    stream = stream or sys.stdout
    items = selftest_items(ctx, table)
    for name, ok, detail in items:
        stream.write(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "") + "\n")
    failed = sum(1 for _, ok, _ in items if not ok)
    stream.write(f"{len(items) - failed}/{len(items)} passed at {ctx.bits} bits\n")
    return 0 if failed == 0 else 1


def cmd_selftest(args) -> int:
    ctx = _ctx(args)
    buf = io.StringIO()
    code = run_selftest(ctx, stream=buf)
    _emit(args, buf.getvalue())
    return code


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    # usage errors must not collide with the UNKNOWN exit code
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--bits", type=int, default=None,
                        help=f"working precision in bits (default {DEFAULT_BITS}, or ${BITS_ENV})")
    common.add_argument("--max-bits", type=int, default=None,
                        help=f"precision ceiling for escalation (default {DEFAULT_MAX_BITS})")
    common.add_argument("--seed", type=int, default=0, help="random seed")
    common.add_argument("--out", default="-", help="output file, '-' for standard output")

    parser = _Parser(
        prog="logcm",
        description="Certified complete-monotonicity decisions for p(log x)/(x_1...x_s).")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decide", parents=[common], help="decide complete monotonicity")
    p.add_argument("problem", help="JSON problem file ('-' for stdin)")
    p.add_argument("--timing", action="store_true", help="include wall time (output is then not reproducible)")
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("transform", parents=[common], help="forward Laplace transform of q(log t)")
    p.add_argument("problem")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("inv-laplace", parents=[common], help="density polynomial of f")
    p.add_argument("problem")
    p.set_defaults(func=cmd_inv_laplace)

    p = sub.add_parser("derivative", parents=[common], help="k-th derivative polynomial and D_k membership")
    p.add_argument("problem")
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_derivative)

    p = sub.add_parser("probe-nesting", parents=[common], help="sample D_1 ⊇ D_2 ⊇ ... evidence")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kmax", type=int, required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--box", default=None,
                   help="'lo:hi' for all coefficients, or 'i=lo:hi;j=lo:hi'")
    p.add_argument("--fixed", default=None, help="pinned coefficients, e.g. '4=1,3=0'")
    p.add_argument("--cm", action="store_true", help="also check CM ⊆ D_k")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_probe_nesting)

    p = sub.add_parser("region-scan", parents=[common], help="grid scan of D_k membership as CSV")
    p.add_argument("--spec", default=None, help="JSON scan specification")
    p.add_argument("--n", type=int)
    p.add_argument("--fixed", default=None)
    p.add_argument("--x-axis", type=int)
    p.add_argument("--x-range", default="-4:4")
    p.add_argument("--y-axis", type=int)
    p.add_argument("--y-range", default="-4:4")
    p.add_argument("--res", type=int, default=50)
    p.add_argument("--k", default="1,2,3", help="comma list; 'inf' adds the CM verdict as D_inf")
    p.add_argument("--no-cm", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_region_scan)

    p = sub.add_parser("constants", parents=[common], help="print gamma, zeta(2..n), g_0..g_n")
    p.add_argument("--n", type=int, default=10)
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("selftest", parents=[common], help="run the embedded identity suite")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"logcm: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PrecisionError as exc:
        print(f"logcm: precision exhausted: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except (ValueError, TypeError) as exc:
        print(f"logcm: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
