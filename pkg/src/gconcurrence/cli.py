"""Command-line interface: ``gconc <subcommand> ...``.

Exit codes: 0 success, 2 usage, 3 domain, 4 accuracy, 5 partial result.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import asymptotics, ensembles, harness, inverse_transform, moments
from .errors import AccuracyError, CapabilityError, DomainError, GConcurrenceError
from .specfun import digamma

EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _order(text: str) -> complex:
    try:
        value = complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    return value


# ----------------------------------------------------------------- moment


def cmd_moment(args, out) -> int:
    rows = []
    for m in args.m:
        order = m.real if m.imag == 0 else m
        if args.k is None:
            fn = moments.det_moment_hs if args.of == "D" else moments.g_moment_hs
            mv = fn(args.n, args.beta, order)
        else:
            fn = moments.det_moment_induced if args.of == "D" else moments.g_moment_induced
            mv = fn(args.n, args.k, args.beta, order)
        rows.append((m, mv))
    if args.format == "json":
        payload = [
            {
                "of": args.of,
                "order": [m.real, m.imag],
                "value": [mv.value.real, mv.value.imag],
                "log_value": [mv.log_value.real, mv.log_value.imag],
            }
            for m, mv in rows
        ]
        out.write(json.dumps({"n": args.n, "k": args.k, "beta": args.beta, "moments": payload}, indent=2) + "\n")
        return 0
    out.write("of,order,value,log_value\n")
    for m, mv in rows:
        if m.imag == 0:
            out.write(f"{args.of},{_fmt(m.real)},{_fmt(mv.value.real)},{_fmt(mv.log_value.real)}\n")
        else:
            out.write(f"{args.of},{m!r},{mv.value!r},{mv.log_value!r}\n")
    return 0


# ---------------------------------------------------------------- density


def _d_grid(n: int, beta: int, count: int) -> np.ndarray:
    plan = inverse_transform.stitch_plan(n, beta)
    span = max(plan.t_max, 10.0)
    t = span / count * np.arange(count, 0, -1)
    return np.exp(-n * math.log(n) - t)


def cmd_density(args, out) -> int:
    n, beta, method = args.n, args.beta, args.method
    if args.grid < 10:
        raise UsageError("--grid needs at least 10 points")
    if method == "auto":
        method = "closed" if n == 2 else "stitched"
    if method == "invert" and n > inverse_transform.MAX_INVERSION_N and not args.allow_large:
        raise CapabilityError(
            f"inversion is capped at n <= {inverse_transform.MAX_INVERSION_N}; "
            "use --method edge for the edge laws, or the `sample` subcommand"
        )
    grid = _d_grid(n, beta, args.grid) if args.of == "D" else inverse_transform.default_grid_g(args.grid)
    if method == "closed":
        if n != 2:
            raise DomainError("closed forms exist only for n = 2")
        curve = inverse_transform.density_n2_closed(beta, args.of, grid)
    else:
        name = {"invert": "contour_inversion", "edge": "edge_asymptote", "stitched": "stitched"}[method]
        fn = inverse_transform.density_d if args.of == "D" else inverse_transform.density_g
        curve = fn(n, beta, grid, method=name, tol=args.tol, allow_large=args.allow_large)
    curve.to_csv(out)
    return 0


# ------------------------------------------------------------ edge-coeffs


def cmd_edge_coeffs(args, out) -> int:
    n, beta = args.n, args.beta
    if args.edge == "left":
        payload = asymptotics.left_edge_expansion(n, beta).to_dict()
    else:
        p = asymptotics.right_edge_exponent(n, beta)
        payload = {
            "n": n,
            "beta": beta,
            "edge": "right",
            "terms": [],
            "law": {
                "form": "constant * t**exponent / D, t = -log D - n log n",
                "exponent": p,
                "constant": asymptotics.right_edge_constant(n, beta),
                "stirling_prefactor": math.exp(moments.stirling_prefactor_log(n, beta)),
            },
        }
    out.write(json.dumps(payload, indent=2) + "\n")
    return 0


# ----------------------------------------------------------------- sample


def cmd_sample(args, out) -> int:
    spec = ensembles.SystemSpec(args.n, args.k, args.beta) if args.k else ensembles.SystemSpec.hs(args.n, args.beta)
    arr = ensembles.sample_arrays(spec, args.count, args.seed, spectra=args.dump)
    if args.dump:
        ensembles.write_samples_csv(arr, out)
        return 0
    if args.bins:
        harness.histogram_from_samples(arr, args.bins, args.of).to_csv(out)
        return 0
    mean_d, se_d = harness.jackknife_mean(arr.det) if len(arr) >= 100 else (float(arr.det.mean()), math.nan)
    mean_g, se_g = harness.jackknife_mean(arr.g) if len(arr) >= 100 else (float(arr.g.mean()), math.nan)
    summary = {
        "seed": args.seed,
        "n": spec.n,
        "k": spec.k,
        "beta": spec.beta,
        "count": len(arr),
        "mean_D": mean_d,
        "se_D": se_d,
        "mean_G": mean_g,
        "se_G": se_g,
        "var_G": float(np.var(arr.g, ddof=1)) if len(arr) > 1 else math.nan,
    }
    out.write(json.dumps(summary, indent=2) + "\n")
    return 0


# --------------------------------------------------------------- validate


def _check_exact_moments():
    got = [
        (moments.det_moment_hs(2, 2, 1).real, 0.1),
        (moments.det_moment_hs(2, 1, 1).real, 0.125),
        (moments.det_moment_hs(3, 2, 1).real, 1 / 165),
        (moments.g_moment_hs(2, 2, 1).real, 3 * math.pi / 16),
    ]
    worst = max(abs(a / b - 1) for a, b in got)
    return worst < 1e-14, f"max rel err {worst:.2e}"


def _check_n2_oracle():
    worst = 0.0
    for beta in (1, 2):
        d = np.linspace(0.00625, 0.24375, 200)
        a = inverse_transform.density_d(2, beta, d).values
        b = inverse_transform.density_n2_closed(beta, "D", d).values
        worst = max(worst, float(np.max(np.abs(a - b))))
    return worst < 1e-6, f"sup err {worst:.2e}"


def _check_residues():
    worst = 0.0
    for n in range(3, 11):
        for beta, power in ((2, 1), (1, 1.5)):
            e = asymptotics.left_edge_expansion(n, beta)
            ref = {(t.d_power, t.log_power): t.coeff for t in asymptotics.left_edge_coeffs_numeric(n, beta, power).terms}
            for t in e.terms:
                if t.d_power <= power:
                    worst = max(worst, abs(t.coeff - ref[(t.d_power, t.log_power)]) / max(abs(t.coeff), 1.0))
    return worst < 1e-9, f"max rel err {worst:.2e}"


def _check_gamma_shift():
    worst = 0.0
    for n in range(3, 11):
        for c in (-10.0, -1.0, 1.0, 10.0):
            shifted = lambda x, c=c: digamma(x) + c  # noqa: E731
            for fn, labels in ((asymptotics.left_edge_coeffs_complex, ("X~",)),
                               (asymptotics.left_edge_coeffs_real, ("X~", "W~"))):
                base, moved = fn(n), fn(n, psi=shifted)
                for lab in labels:
                    a, b = base.coefficient(lab), moved.coefficient(lab)
                    worst = max(worst, abs(a - b) / max(abs(a), 1.0))
    return worst < 1e-12, f"max rel change {worst:.2e}"


def _check_support():
    worst = 0.0
    for n in (3, 4):
        for beta in (1, 2):
            for eps in (1e-4, 1e-2):
                worst = max(worst, abs(inverse_transform.density_d_bromwich(n, beta, n ** (-n) * (1 + eps))))
    return worst < 1e-8, f"max |P| beyond support {worst:.2e}"


def _check_roundtrip():
    worst = 0.0
    for n in (3, 4):
        for beta in (1, 2):
            curve = inverse_transform.density_d(n, beta, inverse_transform.default_grid_d(n, beta), method="stitched")
            for m in (0, 1, 2):
                worst = max(worst, abs(curve.moment(m) / moments.det_moment_hs(n, beta, m).real - 1))
    return worst < 1e-5, f"max rel err {worst:.2e}"


def _mc_checks(samples: int, seed: int):
    def check():
        worst = 0.0
        for i, (n, beta) in enumerate((n, b) for n in (2, 3, 4) for b in (1, 2)):
            spec = ensembles.SystemSpec.hs(n, beta)
            rows = harness.moment_check(spec, samples, [1, 2, 3], seed + i)
            worst = max(worst, max(abs(r.z_score) for r in rows))
        return worst < 5, f"max |z| {worst:.2f} at {samples} samples"

    return check


def _ks_check(samples: int, seed: int):
    def check():
        arr = ensembles.sample_arrays(ensembles.SystemSpec.hs(2, 2), samples, seed)
        ks = harness.ks_distance(arr.g, lambda g: 1 - (1 - np.clip(g, 0, 1) ** 2) ** 1.5)
        bound = 2.0 / math.sqrt(samples)
        return ks < bound, f"KS {ks:.2e} (bound {bound:.2e})"

    return check


def cmd_validate(args, out) -> int:
    samples = 100_000 if args.suite == "quick" else 1_000_000
    checks = [
        ("exact-moments", _check_exact_moments),
        ("n2-inversion-oracle", _check_n2_oracle),
        ("left-edge-residues", _check_residues),
        ("gamma-shift-invariance", _check_gamma_shift),
        ("support-cutoff", _check_support),
        ("moment-round-trip", _check_roundtrip),
        ("monte-carlo-moments", _mc_checks(samples, args.seed)),
        ("monte-carlo-ks-n2", _ks_check(samples, args.seed + 100)),
    ]
    results = []
    for name, fn in checks:
        try:
            ok, detail = fn()
        except GConcurrenceError as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append({"check": name, "passed": bool(ok), "detail": detail})
    if args.format == "json":
        out.write(json.dumps({"seed": args.seed, "suite": args.suite, "results": results}, indent=2) + "\n")
    else:
        out.write(f"# seed={args.seed} suite={args.suite}\n")
        for r in results:
            out.write(f"{'PASS' if r['passed'] else 'FAIL'}  {r['check']}: {r['detail']}\n")
    return 0 if all(r["passed"] for r in results) else AccuracyError.exit_code


# ------------------------------------------------------------------ limit


def cmd_limit(args, out) -> int:
    if args.asymptote:
        out.write(f"1/e = {math.exp(-1.0):.9f}\n")
        return 0
    if args.q is not None:
        if args.q == 1:
            raise DomainError("q = 1 is the Hilbert-Schmidt case; omit --q for the 1/e table")
        target = moments.concentration_point(args.q)
        out.write(f"X_q = {target:.7f}  (q = {args.q:g})\n")
        out.write("J,n,k,mean_G,distance\n")
        for j in args.j_values:
            n, k = harness._dimensions(args.q, j, args.beta)
            mean = moments.g_moment_induced(n, k, args.beta, 1).real
            out.write(f"{j},{n},{k},{_fmt(mean)},{_fmt(abs(mean - target))}\n")
        return 0
    out.write(f"# asymptote 1/e = {math.exp(-1.0):.9f}\n")
    out.write("n,mean_G,var_G,distance\n")
    for n in args.n_values:
        mean, var = moments.g_mean_variance(n, args.beta)
        out.write(f"{n},{_fmt(mean)},{_fmt(var)},{_fmt(abs(mean - math.exp(-1.0)))}\n")
    return 0


# ----------------------------------------------------------------- parser


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _beta(text: str) -> int:
    if text not in ("1", "2"):
        raise argparse.ArgumentTypeError("beta must be 1 or 2")
    return int(text)


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="gconc", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON or YAML file with default option values")
    parser.add_argument("--output", help="write results here instead of standard output")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("moment", help="exact moments of D or G")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--k", type=_positive_int)
    p.add_argument("--beta", type=_beta, required=True)
    p.add_argument("--m", type=_order, action="append", required=True, help="order; repeatable; complex allowed")
    p.add_argument("--of", choices=("D", "G"), default="D")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_moment)
    subs["moment"] = p

    p = sub.add_parser("density", help="density curve P(D) or P(G) as CSV")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--beta", type=_beta, required=True)
    p.add_argument("--of", choices=("D", "G"), default="D")
    p.add_argument("--grid", type=_positive_int, default=400)
    p.add_argument("--method", choices=("auto", "closed", "invert", "edge", "stitched"), default="auto")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--allow-large", action="store_true")
    p.set_defaults(func=cmd_density)
    subs["density"] = p

    p = sub.add_parser("edge-coeffs", help="edge expansion coefficients as JSON")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--beta", type=_beta, required=True)
    p.add_argument("--edge", choices=("left", "right"), default="left")
    p.set_defaults(func=cmd_edge_coeffs)
    subs["edge-coeffs"] = p

    p = sub.add_parser("sample", help="Monte Carlo samples, histograms or summaries")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--k", type=_positive_int)
    p.add_argument("--beta", type=_beta, required=True)
    p.add_argument("--count", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins", type=_positive_int)
    p.add_argument("--of", choices=("D", "G"), default="D")
    p.add_argument("--dump", action="store_true", help="write every spectrum as CSV")
    p.set_defaults(func=cmd_sample)
    subs["sample"] = p

    p = sub.add_parser("validate", help="run the cross-validation checks")
    p.add_argument("--suite", choices=("quick", "full"), default="quick")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_validate)
    subs["validate"] = p

    p = sub.add_parser("limit", help="large-n tables and concentration points")
    p.add_argument("--q", type=float)
    p.add_argument("--asymptote", action="store_true")
    p.add_argument("--beta", type=_beta, default=2)
    p.add_argument("--n-values", type=_positive_int, nargs="+", default=[4, 8, 16, 32, 64])
    p.add_argument("--j-values", type=_positive_int, nargs="+", default=[4, 8, 16, 32])
    p.set_defaults(func=cmd_limit)
    subs["limit"] = p
    return parser, subs


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    try:
        data = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise UsageError(f"cannot parse config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config must be a mapping of option names to values")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def _apply_config(parser: argparse.ArgumentParser, subs: dict, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return
    config = _load_config(known.config)
    command = next((a for a in rest if a in subs), None)
    if command is None:
        return
    target = subs[command]
    allowed = {a.dest: a for a in target._actions if a.dest != "help"}
    unknown = sorted(set(config) - set(allowed))
    if unknown:
        raise UsageError(f"unknown config keys for {command}: {', '.join(unknown)}")
    # values from the file pass through the same type checks as flags
    converted = {}
    for key, value in config.items():
        action = allowed[key]
        if action.type is not None and value is not None:
            values = value if isinstance(value, list) else [value]
            try:
                values = [action.type(str(v)) for v in values]
            except argparse.ArgumentTypeError as exc:
                raise UsageError(f"config key {key}: {exc}") from None
            value = values if isinstance(value, list) or action.nargs in ("+", "*") or isinstance(action, argparse._AppendAction) else values[0]
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"config key {key}: {value!r} not in {list(action.choices)}")
        converted[key] = value
        action.required = False
    target.set_defaults(**converted)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        _apply_config(parser, subs, argv)
    except UsageError as exc:
        print(f"gconc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    buf = io.StringIO()
    try:
        status = args.func(args, buf)
    except UsageError as exc:
        print(f"gconc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GConcurrenceError as exc:
        print(f"gconc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    if args.output:
        Path(args.output).write_text(buf.getvalue())
        return status
    try:
        sys.stdout.write(buf.getvalue())
        sys.stdout.flush()
    except BrokenPipeError:
        # reader went away (e.g. piped into head); nothing left to report
        sys.stdout = open(os.devnull, "w")
    return status


if __name__ == "__main__":
    sys.exit(main())
