"""Named, seeded property suites with replayable JSON reports."""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import sampling
from .decomposition import jordan_decompose
from .kernels import ClosedFormKernel, Kernel, kernel_from_json
from .lattice import NormSpec
from .measure_space import MeasureSpace, parse_space
from .probes import (SeriesValuation, boundedness_certificate, calibrated_power_kernel,
                     connected_disjoint_additivity_suite, series_sum_check, tent_bound,
                     tent_kernel_phi_n, two_block_defects)
from .representation import (fit_growth_bound, fit_kernel_growth_bound, invariance_check,
                             parse_lambda_grid, recover_kernel, recover_theta, roundtrip_check)
from .valuation import (kernel_valuation, orthogonality_defect, relative_valuation_defect,
                        valuation_defect)

ALGEBRAIC_TOL = 1e-10
OPTIMIZATION_TOL = 1e-6


class ConfigError(ValueError):
    """Invalid suite configuration or unreadable input."""


@dataclass
class SuiteConfig:
    suite: str
    space: str | dict = "uniform:1000"
    seed: int = 0
    trials: int = 100
    tol: float | None = None
    kernel: str | dict | None = None
    norm: dict | None = None
    lambda_grid: str | None = None
    params: dict = field(default_factory=dict)
    output: str | None = None

    def __post_init__(self):
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}; choose from {sorted(SUITES)}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError("trials must be a positive integer")
        if self.tol is None:
            self.tol = SUITES[self.suite][1]
        if not self.tol > 0:
            raise ConfigError("tol must be positive")

    def echo(self) -> dict:
        out = asdict(self)
        out.pop("output")
        return out

    @classmethod
    def from_echo(cls, obj: dict, output: str | None = None) -> "SuiteConfig":
        try:
            return cls(**obj, output=output)
        except TypeError as exc:
            raise ConfigError(f"report config does not match the schema: {exc}") from exc


@dataclass
class SuiteReport:
    suite: str
    config: dict
    passed: bool
    max_defect: float
    tol: float
    witnesses: object
    details: dict
    wall_time: float

    def to_json(self) -> dict:
        return {"suite": self.suite, "config": self.config, "pass": self.passed,
                "max_defect": self.max_defect, "tol": self.tol,
                "witnesses": self.witnesses, "details": self.details,
                "wall_time": self.wall_time}

    @classmethod
    def from_json(cls, obj: dict) -> "SuiteReport":
        try:
            return cls(obj["suite"], obj["config"], obj["pass"], obj["max_defect"], obj["tol"],
                       obj.get("witnesses"), obj.get("details", {}), obj.get("wall_time", 0.0))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"not a suite report: {exc}") from exc


# -- input resolution -------------------------------------------------------

def load_json_arg(text: str | None):
    """Inline JSON, a path to a JSON file, or the string itself."""
    if text is None:
        return None
    s = text.strip()
    if s.startswith("{") or s.startswith("["):
        try:
            return json.loads(s)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid inline JSON: {exc}") from exc
    p = Path(s)
    if p.suffix == ".json" or p.is_file():
        try:
            return json.loads(p.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read {p}: {exc}") from exc
    return s


def resolve_space(spec) -> MeasureSpace:
    try:
        if isinstance(spec, dict):
            return MeasureSpace.from_json(spec)
        return parse_space(str(spec))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def resolve_kernel(spec, space: MeasureSpace, rng, default: str = "random") -> Kernel:
    spec = default if spec is None else spec
    try:
        if isinstance(spec, dict):
            return kernel_from_json(spec, space.n)
        if spec == "random":
            return sampling.random_sine_kernel(rng, space.n)
        if spec == "theta-square":
            return ClosedFormKernel("power", {"coef": 1.0, "p": 2.0}, space.n)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad kernel: {exc}") from exc
    raise ConfigError(f"unknown kernel spec {spec!r}")


def resolve_norm(obj) -> NormSpec:
    try:
        return NormSpec.lp(2.0) if obj is None else NormSpec.from_json(obj)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _grid(cfg: SuiteConfig, default: str = "-3:3:25") -> np.ndarray:
    try:
        return parse_lambda_grid(cfg.lambda_grid or default)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _value_range(kernel: Kernel, lo=-3.0, hi=3.0):
    klo, khi = kernel.lambda_range
    return max(lo, klo), min(hi, khi)


# -- suites ----------------------------------------------------------------

def _valuation_law(cfg, space, rng):
    kernel = resolve_kernel(cfg.kernel, space, rng)
    V = kernel_valuation(kernel, space)
    lo, hi = _value_range(kernel)
    worst, witness = -1.0, None
    for _ in range(cfg.trials):
        f, g = sampling.random_pair(rng, space.n, lo, hi)
        d = relative_valuation_defect(V, f, g)
        if d > worst:
            worst, witness = d, [f.tolist(), g.tolist()]
    return worst, witness, {"defect": "|V(f v g)+V(f ^ g)-V(f)-V(g)| / (1+|V(f)|+|V(g)|)"}


def _orthogonality(cfg, space, rng):
    kernel = resolve_kernel(cfg.kernel, space, rng)
    V = kernel_valuation(kernel, space)
    lo, hi = _value_range(kernel)
    worst, witness = -1.0, None
    for _ in range(cfg.trials):
        f, g = sampling.random_disjoint_pair(rng, space.n, lo, hi)
        d = orthogonality_defect(V, f, g)
        if d > worst:
            worst, witness = d, [f.tolist(), g.tolist()]
    return worst, witness, {"defect": "|V(f+g)-V(f)-V(g)| on disjoint pairs"}


def _jordan(cfg, space, rng):
    kernel = resolve_kernel(cfg.kernel, space, rng)
    V = kernel_valuation(kernel, space)
    J = jordan_decompose(V)
    _, hi = _value_range(kernel)
    worst, witness = -1.0, None
    parts = {"plus_valuation": 0.0, "plus_negative": 0.0, "minus_negative": 0.0, "identity": 0.0}
    for _ in range(cfg.trials):
        f, g = sampling.random_positive(rng, space.n, hi), sampling.random_positive(rng, space.n, hi)
        pf, nf = J.positive(f), J.negative(f)
        cur = {
            "plus_valuation": relative_valuation_defect(J.positive, f, g),
            "plus_negative": max(0.0, -pf),
            "minus_negative": max(0.0, -nf),
            "identity": abs(pf - nf - V(f)),
        }
        for k, v in cur.items():
            parts[k] = max(parts[k], v)
        d = max(cur.values())
        if d > worst:
            worst, witness = d, [f.tolist(), g.tolist()]
    return worst, witness, {"components": parts}


def _recovery(cfg, space, rng):
    kernel = resolve_kernel(cfg.kernel, space, rng)
    V = kernel_valuation(kernel, space)
    lo, hi = _value_range(kernel)
    grid = _grid(cfg, f"{lo}:{hi}:25")
    K = recover_kernel(V, grid, space)
    on_grid = [sampling.grid_valued(rng, space.n, grid) for _ in range(cfg.trials)]
    rep = roundtrip_check(V, K, on_grid, space, cfg.seed)
    off = [sampling.random_function(rng, space.n, grid[0], grid[-1]) for _ in range(cfg.trials)]
    off_rep = roundtrip_check(V, K, off, space, cfg.seed)
    details = {"off_grid_defect": off_rep.max_defect, "lambda_grid": grid.tolist()}
    lip = kernel.lipschitz(max(abs(grid[0]), abs(grid[-1])))
    if lip is not None:
        details["off_grid_bound"] = float(lip.max()) * float(np.max(np.diff(grid))) * space.atom_mass
    return rep.max_defect, rep.witness, details


def _invariance(cfg, space, rng):
    if not space.is_uniform:
        raise ConfigError("the invariance suite needs a uniform space")
    kernel = resolve_kernel(cfg.kernel, space, rng, default="theta-square")
    V = kernel_valuation(kernel, space)
    lo, hi = _value_range(kernel)
    grid = _grid(cfg, f"{lo}:{hi}:25")
    rep = invariance_check(V, grid, space, cfg.trials, cfg.seed)
    return rep.max_defect, rep.witness, {}


def _growth_bound(cfg, space, rng):
    kernel = resolve_kernel(cfg.kernel, space, rng, default="theta-square")
    V = kernel_valuation(kernel, space)
    lo, hi = _value_range(kernel, -10.0, 10.0)
    grid = _grid(cfg, f"{lo}:{hi}:41")
    spec = resolve_norm(cfg.norm)
    p = spec.p if spec.variant == "lp" else 2.0
    theta = recover_theta(V, grid, space)
    gb = fit_growth_bound(theta, p, space.finite_measure)
    violation = float(np.max(np.abs(theta.values) - gb.envelope(theta.lambda_grid)))
    return (max(theta.reference_gap, violation, 0.0), None,
            {"growth_bound": gb.to_json(), "theta": theta.to_json()})


def _probe_c0(cfg, space, rng):
    n = int(cfg.params.get("n", 30))
    V = SeriesValuation(n)
    table = []
    worst = 0.0
    for k in range(1, n + 1):
        e = np.zeros(n)
        e[k - 1] = 1.0
        v = V(e)
        table.append({"n": k, "V(e_n)": v})
        worst = max(worst, abs(v - k))
    W = V.as_valuation()
    law = 0.0
    for _ in range(cfg.trials):
        x, y = rng.uniform(0.0, 1.0, n), rng.uniform(0.0, 1.0, n)
        law = max(law, relative_valuation_defect(W, x, y))
    check = series_sum_check(0.5, 50)
    details = {"table": table, "valuation_defect": law, "series_check": check}
    return max(worst, law, check["oracle_gap"]), None, details


def _probe_min(cfg, space, rng):
    n_grid = int(cfg.params.get("n_grid", 64))
    rep = connected_disjoint_additivity_suite(n_grid, cfg.trials, cfg.seed)
    blocks = two_block_defects(int(cfg.params.get("block", 8)))
    defect = max(rep.max_defect, abs(blocks["valuation_defect"] - 1.0))
    return defect, {"connected": rep.witness, "two_block": blocks["witness"]}, {
        "connected_orthogonality_defect": rep.max_defect,
        "two_block_valuation_defect": blocks["valuation_defect"],
        "two_block_orthogonality_defect": blocks["orthogonality_defect"],
        "two_block_phi": blocks["phi"],
    }


def _probe_tent(cfg, space, rng):
    n_blocks = int(cfg.params.get("n_blocks", 10))
    kernel, tspace = tent_kernel_phi_n(n_blocks)
    V = kernel_valuation(kernel, tspace)
    best, witness = -math.inf, None
    for _ in range(cfg.trials):
        f = rng.uniform(0.0, 6.0, tspace.n)
        v = V(f)
        if v > best:
            best, witness = v, f.tolist()
    peak = float(kernel.evaluate(np.full(tspace.n, 2.0)).max())
    gb = fit_kernel_growth_bound(kernel, np.linspace(0.0, 6.0, 25), 2.0, True)
    bound = tent_bound(n_blocks)
    return max(0.0, best - bound), witness, {
        "max_V": best, "bound": bound, "max_K_at_2": peak, "expected_peak": 2.0 ** n_blocks,
        "kernel_growth_bound": gb.to_json()}


def _probe_boundedness(cfg, space, rng):
    if not space.nonatomic_surrogate:
        raise ConfigError("the boundedness probe needs a non-atomic surrogate grid")
    spec = resolve_norm(cfg.norm)
    if spec.variant != "lp":
        raise ConfigError("the boundedness probe needs an Lp norm")
    delta = float(cfg.params.get("delta", 0.5))
    q = float(cfg.params.get("q", spec.p))
    certs = []
    worst, witness = -1.0, None
    for t in range(cfg.trials):
        kernel = calibrated_power_kernel(rng, space.n, delta, spec.p)
        V = kernel_valuation(kernel, space)
        f = np.ones(space.n) if t == 0 else rng.uniform(-2.0, 2.0, space.n)
        c = boundedness_certificate(V, f, delta, q, spec, space)
        d = max(c.achieved - c.bound, c.reconstitution_gap, 0.0)
        certs.append({"n_pieces": len(c.pieces), "bound": c.bound, "achieved": c.achieved,
                      "slack": c.slack, "eps_grid": c.eps_grid,
                      "reconstitution_gap": c.reconstitution_gap,
                      "calibration_max": c.calibration_max})
        if d > worst:
            worst, witness = d, {"trial": t, "pieces": [list(A.indices) for A in c.pieces]}
    return worst, witness, {"certificates": certs, "delta": delta, "q": q}


SUITES: dict[str, tuple[Callable, float]] = {
    "valuation-law": (_valuation_law, ALGEBRAIC_TOL),
    "orthogonality": (_orthogonality, ALGEBRAIC_TOL),
    "jordan": (_jordan, OPTIMIZATION_TOL),
    "recovery": (_recovery, ALGEBRAIC_TOL),
    "invariance": (_invariance, ALGEBRAIC_TOL),
    "growth-bound": (_growth_bound, ALGEBRAIC_TOL),
    "probes-c0-series": (_probe_c0, ALGEBRAIC_TOL),
    "probes-min-functional": (_probe_min, ALGEBRAIC_TOL),
    "probes-tent-kernel": (_probe_tent, ALGEBRAIC_TOL),
    "probes-boundedness": (_probe_boundedness, ALGEBRAIC_TOL),
}


def run_suite(cfg: SuiteConfig) -> SuiteReport:
    fn, _ = SUITES[cfg.suite]
    space = resolve_space(cfg.space)
    resolve_norm(cfg.norm)  # reject a malformed norm even where the suite ignores it
    rng = np.random.default_rng(cfg.seed)
    t0 = time.perf_counter()
    defect, witness, details = fn(cfg, space, rng)
    wall = time.perf_counter() - t0
    defect = float(defect)
    return SuiteReport(cfg.suite, cfg.echo(), bool(defect <= cfg.tol), defect, cfg.tol,
                       witness, details, wall)


def replay(report_path: str | Path) -> tuple[SuiteReport, bool]:
    """Rerun a report's embedded config; True when max_defect matches bit-for-bit."""
    try:
        old = SuiteReport.from_json(json.loads(Path(report_path).read_text()))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read report {report_path}: {exc}") from exc
    new = run_suite(SuiteConfig.from_echo(old.config))
    same_witness = json.loads(dumps(new.witnesses)) == old.witnesses
    return new, new.max_defect == old.max_defect and same_witness


def _default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def dumps(obj, **kw) -> str:
    return json.dumps(obj, default=_default, **kw)
