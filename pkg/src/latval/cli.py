"""Command-line driver.

Exit codes: 0 pass, 1 suite failure, 2 bad input, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from .decomposition import jordan_decompose, positive_part_bruteforce
from .kernels import KernelRangeError
from .measure_space import GridTooCoarse, TargetUnreachable
from .representation import (fit_growth_bound, invariance_check, parse_lambda_grid,
                             recover_kernel, recover_theta, roundtrip_check)
from .sampling import grid_valued
from .suites import (SUITES, ConfigError, SuiteConfig, dumps, load_json_arg, replay,
                     resolve_kernel, resolve_space, run_suite)
from .valuation import kernel_valuation

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3

PROBES = {
    "c0-series": "probes-c0-series",
    "min-functional": "probes-min-functional",
    "tent-kernel": "probes-tent-kernel",
    "boundedness": "probes-boundedness",
}


def _common(p: argparse.ArgumentParser, trials: int = 100):
    p.add_argument("--space", default="uniform:1000",
                   help="uniform:N[:MASS], inline JSON, or a JSON file")
    p.add_argument("--kernel", default=None,
                   help="'random', 'theta-square', inline JSON, or a JSON file")
    p.add_argument("--norm", default=None, help='e.g. {"variant":"lp","p":2}')
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=trials)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--lambda-grid", default=None, help="min:max:steps")
    p.add_argument("--out", default=None, help="report path (default: stdout)")
    p.add_argument("--csv", default=None, help="also write a flat CSV export here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latval", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-suite", help="run a named property suite")
    p.add_argument("name", choices=sorted(SUITES))
    _common(p)
    _probe_flags(p)

    p = sub.add_parser("probe", help="run one of the explicit examples")
    p.add_argument("name", choices=sorted(PROBES))
    _common(p)
    _probe_flags(p)

    p = sub.add_parser("decompose", help="Jordan decomposition of a kernel valuation at f")
    _common(p, trials=1)
    p.add_argument("--f", default=None, help="JSON array (f >= 0); random if omitted")
    p.add_argument("--grid-points", type=int, default=1001)

    p = sub.add_parser("recover", help="recover the kernel (and theta) of a valuation")
    _common(p)

    p = sub.add_parser("replay", help="rerun a report with its embedded seed")
    p.add_argument("report")
    p.add_argument("--out", default=None)
    p.add_argument("--csv", default=None)
    return parser


def _probe_flags(p):
    p.add_argument("--n", type=int, default=None, help="series truncation (c0-series)")
    p.add_argument("--n-grid", type=int, default=None, help="path length (min-functional)")
    p.add_argument("--n-blocks", type=int, default=None, help="tent blocks (tent-kernel)")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--q", type=float, default=None)


def _config(args, suite: str) -> SuiteConfig:
    params = {}
    for key in ("n", "n_grid", "n_blocks", "delta", "q"):
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    norm = load_json_arg(args.norm)
    if norm is not None and not isinstance(norm, dict):
        raise ConfigError(f"--norm must be a JSON object, got {args.norm!r}")
    return SuiteConfig(suite=suite, space=load_json_arg(args.space), seed=args.seed,
                       trials=args.trials, tol=args.tol, kernel=load_json_arg(args.kernel),
                       norm=norm, lambda_grid=args.lambda_grid, params=params,
                       output=args.out)


def _emit(payload: dict, out: str | None, csv_path: str | None):
    text = dumps(payload, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    if csv_path:
        Path(csv_path).write_text(to_csv(payload))


def to_csv(payload: dict) -> str:
    """Rows of ``details.table`` when present, otherwise scalar key/value pairs."""
    buf = io.StringIO()
    table = payload.get("details", {}).get("table") if isinstance(payload.get("details"), dict) else None
    if table:
        w = csv.DictWriter(buf, fieldnames=list(table[0]))
        w.writeheader()
        w.writerows(table)
    else:
        w = csv.writer(buf)
        w.writerow(["key", "value"])
        for k, v in payload.items():
            if isinstance(v, (int, float, str, bool)) or v is None:
                w.writerow([k, v])
    return buf.getvalue()


def _run_suite_command(args, suite: str) -> int:
    report = run_suite(_config(args, suite))
    _emit(report.to_json(), args.out, args.csv)
    return EXIT_PASS if report.passed else EXIT_FAIL


def _decompose(args) -> int:
    cfg = _config(args, "jordan")
    space = resolve_space(cfg.space)
    rng = np.random.default_rng(args.seed)
    kernel = resolve_kernel(cfg.kernel, space, rng)
    if args.f is None:
        hi = min(3.0, kernel.lambda_range[1])
        f = rng.uniform(0.0, hi, space.n)
    else:
        f = np.asarray(load_json_arg(args.f), dtype=float)
        if f.shape != (space.n,):
            raise ConfigError(f"--f must have {space.n} entries")
        if np.any(f < 0):
            raise ConfigError("--f must be nonnegative")
    V = kernel_valuation(kernel, space)
    J = jordan_decompose(V)
    vp, vm, v = J.positive(f), J.negative(f), V(f)
    oracle = positive_part_bruteforce(V, f, args.grid_points)
    payload = {"f": f.tolist(), "V(f)": v, "V_plus": vp, "V_minus": vm,
               "oracle_gap": abs(vp - oracle), "grid_points": args.grid_points}
    lip = kernel.lipschitz(float(f.max(initial=0.0)))
    if lip is not None:
        payload["oracle_bound"] = float(np.sum(lip * f * space.weights) / args.grid_points)
    _emit(payload, args.out, args.csv)
    ok = vp >= -1e-12 and vm >= -1e-12 and ("oracle_bound" not in payload
                                            or payload["oracle_gap"] <= payload["oracle_bound"] + 1e-12)
    return EXIT_PASS if ok else EXIT_FAIL


def _recover(args) -> int:
    cfg = _config(args, "recovery")
    space = resolve_space(cfg.space)
    rng = np.random.default_rng(args.seed)
    kernel = resolve_kernel(cfg.kernel, space, rng)
    lo, hi = max(-3.0, kernel.lambda_range[0]), min(3.0, kernel.lambda_range[1])
    try:
        grid = parse_lambda_grid(args.lambda_grid or f"{lo}:{hi}:25")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    V = kernel_valuation(kernel, space)
    K = recover_kernel(V, grid, space)
    samples = [grid_valued(rng, space.n, grid) for _ in range(args.trials)]
    rt = roundtrip_check(V, K, samples, space, args.seed)
    payload = {"kernel": K.to_json(), "roundtrip_defect": rt.max_defect,
               "invariance_defect": None, "theta": None, "growth_bound": None}
    if space.is_uniform:
        inv = invariance_check(V, grid, space, args.trials, args.seed)
        payload["invariance_defect"] = inv.max_defect
        if inv.max_defect <= cfg.tol:
            theta = recover_theta(V, grid, space)
            payload["theta"] = theta.to_json()
            payload["growth_bound"] = fit_growth_bound(theta, 2.0, space.finite_measure).to_json()
    _emit(payload, args.out, args.csv)
    return EXIT_PASS if rt.max_defect <= cfg.tol else EXIT_FAIL


def _replay(args) -> int:
    report, same = replay(args.report)
    payload = report.to_json()
    payload["reproduced"] = same
    _emit(payload, args.out, args.csv)
    if not same:
        return EXIT_FAIL
    return EXIT_PASS if report.passed else EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # argparse exits with status 2 on bad usage
    try:
        if args.command == "verify-suite":
            return _run_suite_command(args, args.name)
        if args.command == "probe":
            return _run_suite_command(args, PROBES[args.name])
        if args.command == "decompose":
            return _decompose(args)
        if args.command == "recover":
            return _recover(args)
        return _replay(args)
    except (ConfigError, KernelRangeError, GridTooCoarse, TargetUnreachable) as exc:
        print(f"latval: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"latval: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
