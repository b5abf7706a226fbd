"""Command-line driver.

Subcommands ``solve``, ``verify <suite>``, ``serrin``, ``flow`` and
``geometry`` read a JSON run configuration and write fields, CSV samples and
JSON reports into the output directory. Exit codes: 0 success, 1 a check
failed, 2 configuration error, 3 solver did not converge, 4 inconclusive
verdict.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from jsonschema import ValidationError

from .analysis import (
    CheckResult,
    PField,
    Trajectory,
    check_p_along_flow,
    check_p_bounds,
    check_p_eps_monotone,
    check_sup_convolution_regularity,
    gradient_flow,
    holder_exponent_near_max,
    max_set_mask,
    omega_eps_starts,
    p_function,
    sup_convolution,
    write_trajectory_csv,
)
from .errors import ConfigurationError, InflapError, InsufficientDataError, InvalidInputError, InvalidStartError
from .geometry import C0, Domain, cut_locus, domain_from_dict, domain_to_dict, high_ridge, inradius, web_function
from .grid import Grid, ScalarField, build_grid, convex_envelope, midpoint_concavity_deficit, read_field, write_field
from .reports import dumps, validate, write_json
from .serrin import SerrinTolerances, Verdict, serrin_diagnose, stadium_reconstruct
from .solver import SolveResult, SolverConfig, solve_dirichlet
from .tags import tag

logger = logging.getLogger("inflap")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3
EXIT_INCONCLUSIVE = 4

SUITE_NAMES = ("concavity", "pbounds", "supconv", "flow", "holder")
ANALYSIS_DEFAULTS = {name: True for name in SUITE_NAMES}

__all__ = [
    "RunConfig",
    "load_config",
    "cmd_solve",
    "cmd_verify",
    "cmd_serrin",
    "cmd_flow",
    "cmd_geometry",
    "run_suite",
    "default_flow_starts",
    "main",
]


@dataclass
class RunConfig:
    domain: Domain
    resolution: int = 128
    solver: SolverConfig = field(default_factory=SolverConfig)
    analysis: dict = field(default_factory=lambda: dict(ANALYSIS_DEFAULTS))
    serrin: bool = True
    serrin_tolerances: SerrinTolerances = field(default_factory=SerrinTolerances)
    output_dir: Path = Path("out")
    rng_seed: int = 0
    flow_starts: list | None = None
    flow_count: int = 32
    flow_start_depth: float = 0.01
    supconv_ladder: tuple = (4.0, 2.0, 1.0)
    supconv_trajectories: int = 32
    concavity_samples: int = 10_000

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        try:
            validate(d, "config")
        except ValidationError as exc:
            path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigurationError(f"config {path}: {exc.message}") from None
        try:
            domain = domain_from_dict(d["domain"])
        except InvalidInputError as exc:
            raise ConfigurationError(str(exc)) from None
        flow = d.get("flow", {})
        sup = d.get("supconv", {})
        return cls(
            domain=domain,
            resolution=int(d.get("resolution", 128)),
            solver=SolverConfig.from_dict(d.get("solver", {})),
            analysis={**ANALYSIS_DEFAULTS, **d.get("analysis", {})},
            serrin=bool(d.get("serrin", True)),
            serrin_tolerances=SerrinTolerances.from_dict(d.get("serrin_tolerances", {})),
            output_dir=Path(d.get("output_dir", "out")),
            rng_seed=int(d.get("rng_seed", 0)),
            flow_starts=[list(map(float, s)) for s in flow["starts"]] if "starts" in flow else None,
            flow_count=int(flow.get("count", 32)),
            flow_start_depth=float(flow.get("start_depth", 0.01)),
            supconv_ladder=tuple(float(x) for x in sup.get("ladder", (4.0, 2.0, 1.0))),
            supconv_trajectories=int(sup.get("trajectories", 32)),
            concavity_samples=int(d.get("concavity", {}).get("samples", 10_000)),
        )

    def to_dict(self) -> dict:
        out = {
            "domain": domain_to_dict(self.domain),
            "resolution": self.resolution,
            "solver": self.solver.to_dict(),
            "analysis": dict(self.analysis),
            "serrin": self.serrin,
            "serrin_tolerances": {
                "a": self.serrin_tolerances.a,
                "p": self.serrin_tolerances.p,
                "reference_resolution": self.serrin_tolerances.reference_resolution,
                "min_inradius_cells": self.serrin_tolerances.min_inradius_cells,
            },
            "output_dir": str(self.output_dir),
            "rng_seed": self.rng_seed,
            "flow": {"count": self.flow_count, "start_depth": self.flow_start_depth},
            "supconv": {"ladder": list(self.supconv_ladder), "trajectories": self.supconv_trajectories},
            "concavity": {"samples": self.concavity_samples},
        }
        if self.flow_starts is not None:
            out["flow"]["starts"] = self.flow_starts
        return out

    def solve_digest(self) -> str:
        key = {"domain": domain_to_dict(self.domain), "resolution": self.resolution,
               "solver": self.solver.to_dict()}
        return hashlib.sha256(dumps(key).encode()).hexdigest()


def load_config(path, resolution: int | None = None, out: str | None = None,
                seed: int | None = None) -> RunConfig:
    """Read a JSON run configuration and apply command-line overrides."""
    try:
        d = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(d, dict):
        raise ConfigurationError("config must be a JSON object")
    if resolution is not None:
        d["resolution"] = resolution
    if out is not None:
        d["output_dir"] = out
    if seed is not None:
        d["rng_seed"] = seed
    return RunConfig.from_dict(d)


def _threads() -> int:
    raw = os.environ.get("INFLAP_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"INFLAP_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigurationError("INFLAP_THREADS must be >= 1")
    import numba

    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    return n


def _pmap(fn, items, threads: int) -> list:
    """Order-preserving map over independent jobs."""
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# -- solve artifacts ---------------------------------------------------------


def _nan_outside(grid: Grid, values: np.ndarray) -> ScalarField:
    return ScalarField(grid, np.where(grid.inside_mask, values, np.nan), dirichlet_zero=False)


def _solve_summary(cfg: RunConfig, grid: Grid, sol: SolveResult) -> dict:
    rho = inradius(cfg.domain)
    mu = float(np.nanmax(sol.u.values))
    pred = C0 * rho ** (4.0 / 3.0)
    return {
        "kind": "solve",
        "domain": domain_to_dict(cfg.domain),
        "resolution": cfg.resolution,
        "h": grid.h,
        "converged": bool(sol.converged),
        "iterations": int(sol.iterations),
        "final_residual": float(sol.final_residual),
        "mu": mu,
        "rho": rho,
        "predicted_mu": pred,
        "mu_relative_to_prediction": (mu - pred) / pred,
        "solver": cfg.solver.to_dict(),
        "momentum_restarts": int(sol.diagnostics.get("momentum_restarts", 0)),
        "residual_history": [list(r) for r in sol.diagnostics.get("residual_history", [])],
        "config_digest": cfg.solve_digest(),
        "tag": tag("solve"),
    }


def _write_solve_artifacts(cfg: RunConfig, grid: Grid, sol: SolveResult) -> dict:
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    write_field(out / "u.iglfield", sol.u)
    write_field(out / "d.iglfield", _nan_outside(grid, grid.sd))
    p = p_function(sol.u, cfg.domain)
    write_field(out / "P.iglfield", p.values)
    summary = _solve_summary(cfg, grid, sol)
    write_json(out / "solve.json", summary, "solve")
    return summary


def _solve_or_load(cfg: RunConfig) -> tuple[Grid, SolveResult, dict]:
    """Reuse ``u.iglfield`` from the output directory when it matches the config."""
    grid = build_grid(cfg.domain, cfg.resolution)
    out = cfg.output_dir
    try:
        summary = json.loads((out / "solve.json").read_text())
        if summary.get("config_digest") == cfg.solve_digest() and summary.get("converged"):
            u = read_field(out / "u.iglfield", grid)
            logger.info("reusing solution in %s", out)
            sol = SolveResult(u, int(summary["iterations"]), float(summary["final_residual"]), True,
                              {"momentum_restarts": summary.get("momentum_restarts", 0)})
            return grid, sol, summary
    except (OSError, ValueError, KeyError):
        pass
    sol = solve_dirichlet(cfg.domain, grid, cfg.solver)
    summary = _write_solve_artifacts(cfg, grid, sol)
    return grid, sol, summary


def _solve_block(summary: dict) -> dict:
    return {k: summary[k] for k in ("converged", "iterations", "final_residual", "mu", "rho", "predicted_mu")}


# -- verification suites -----------------------------------------------------


class _Context:
    def __init__(self, cfg: RunConfig, grid: Grid, sol: SolveResult, threads: int = 1):
        self.cfg = cfg
        self.domain = cfg.domain
        self.grid = grid
        self.u = sol.u
        self.mu = float(np.nanmax(sol.u.values))
        self.threads = threads
        self._p: PField | None = None

    @property
    def p(self) -> PField:
        if self._p is None:
            self._p = p_function(self.u, self.domain)
        return self._p


def default_flow_starts(domain: Domain, count: int = 32, depth: float = 0.01) -> np.ndarray:
    """``count`` evenly spaced boundary points moved inward by ``depth`` times the inradius."""
    pts, nrm = domain.boundary_samples(count)
    return pts + depth * inradius(domain) * nrm


def _suite_pbounds(ctx: _Context) -> list[CheckResult]:
    return [check_p_bounds(ctx.p, 0.05 * ctx.mu)]


def _suite_concavity(ctx: _Context) -> list[CheckResult]:
    grid, h = ctx.grid, ctx.grid.h
    w = _nan_outside(grid, np.clip(ctx.u.values, 0.0, None) ** 0.75)
    d = midpoint_concavity_deficit(w, ctx.cfg.concavity_samples, ctx.cfg.rng_seed)
    neg = ScalarField(grid, -w.values, dirichlet_zero=False)
    env = convex_envelope(neg)
    dev = float(np.nanmax(np.abs(env.values - neg.values)))
    return [
        CheckResult("concavity_midpoint", d.worst <= 10 * h, tag("concavity_midpoint"),
                    measured={"worst_deficit": d.worst, "samples": d.samples},
                    tolerance={"max_deficit": 10 * h},
                    details={"x": d.x.tolist(), "y": d.y.tolist(), "lambda": d.lam,
                             "rng_seed": ctx.cfg.rng_seed}),
        CheckResult("concavity_envelope", dev <= 5 * h, tag("concavity_envelope"),
                    measured={"envelope_linf_deviation": dev},
                    tolerance={"max_deviation": 5 * h}),
    ]


def _flow_starts(ctx: _Context) -> np.ndarray:
    if ctx.cfg.flow_starts is not None:
        return np.asarray(ctx.cfg.flow_starts, dtype=float).reshape(-1, 2)
    return default_flow_starts(ctx.domain, ctx.cfg.flow_count, ctx.cfg.flow_start_depth)


def _flow_checks(ctx: _Context, trajs: list[Trajectory]) -> tuple[list[CheckResult], list[dict]]:
    """P drift / profile fit and arrival checks, plus one summary row per trajectory."""
    grid, h = ctx.grid, ctx.grid.h
    tol = 0.03 * ctx.mu
    K = grid.coords()[max_set_mask(ctx.u)]
    rows, fits = [], []
    for tr in trajs:
        try:
            fit = check_p_along_flow(ctx.p, tr, tol)
        except InsufficientDataError:
            fit = None
        end = tr.samples[-1, 1:3]
        dist_k = float(np.min(np.linalg.norm(K - end, axis=1)))
        m = float(tr.u[0])
        lam = fit.measured["lambda_fit"] if fit else float(tr.P[0])
        pred = math.sqrt(max(lam - m, 0.0))
        rows.append({
            "start": tr.start.tolist(),
            "terminated": tr.terminated.value,
            "terminal": end.tolist(),
            "terminal_distance_to_max_set": dist_k,
            "arrival_time": tr.arrival_time,
            "predicted_arrival_time": pred,
            "p_drift": fit.measured["p_drift"] if fit else None,
            "profile_max_deviation": fit.measured["profile_max_deviation"] if fit else None,
            "lambda_fit": lam,
            "samples": int(len(tr.samples)),
        })
        fits.append(fit)
    ok_fit = bool(trajs) and all(f is not None and f.passed for f in fits)
    drifts = [r["p_drift"] for r in rows if r["p_drift"] is not None]
    devs = [r["profile_max_deviation"] for r in rows if r["profile_max_deviation"] is not None]
    arr_err = [abs(r["arrival_time"] - r["predicted_arrival_time"]) / r["predicted_arrival_time"]
               for r in rows if r["predicted_arrival_time"] > 0]
    dists = [r["terminal_distance_to_max_set"] for r in rows]
    ok_arr = bool(trajs) and len(arr_err) == len(rows) and max(arr_err) <= 0.05 and max(dists) <= 5 * h
    checks = [
        CheckResult("p_along_flow", ok_fit, tag("p_along_flow"),
                    measured={"trajectories": len(trajs),
                              "worst_p_drift": max(drifts) if drifts else None,
                              "worst_profile_deviation": max(devs) if devs else None,
                              "too_short": sum(f is None for f in fits)},
                    tolerance={"tol": tol}),
        CheckResult("flow_arrival", ok_arr, tag("flow_arrival"),
                    measured={"trajectories": len(trajs),
                              "worst_terminal_distance": max(dists) if dists else None,
                              "worst_arrival_relative_error": max(arr_err) if arr_err else None,
                              "sqrt_mu": math.sqrt(ctx.mu)},
                    tolerance={"terminal_distance": 5 * h, "arrival_relative": 0.05}),
    ]
    return checks, rows


def _trajectories(ctx: _Context, starts: np.ndarray, strict: bool) -> tuple[list[Trajectory], list]:
    def run(s):
        try:
            return gradient_flow(ctx.u, s)
        except InvalidStartError as exc:
            if strict:
                raise
            return exc

    out = _pmap(run, list(starts), ctx.threads)
    trajs = [t for t in out if isinstance(t, Trajectory)]
    bad = [(s.tolist(), str(t)) for s, t in zip(starts, out) if not isinstance(t, Trajectory)]
    return trajs, bad


def _suite_flow(ctx: _Context) -> list[CheckResult]:
    trajs, bad = _trajectories(ctx, _flow_starts(ctx), strict=False)
    checks, rows = _flow_checks(ctx, trajs)
    for c in checks:
        c.details = {"skipped_starts": bad}
        if bad:
            c.passed = False
    checks[0].details["trajectories"] = rows
    return checks


def _suite_supconv(ctx: _Context) -> list[CheckResult]:
    h = ctx.grid.h
    scs = [sup_convolution(ctx.u, k * h) for k in ctx.cfg.supconv_ladder]
    inside = ctx.grid.inside_mask
    checks = []
    gaps = [float(np.min((s.u_eps.values - ctx.u.values)[inside])) for s in scs]
    checks.append(CheckResult(
        "sup_convolution_dominates", min(gaps) >= -1e-12 * ctx.mu, tag("sup_convolution_regularity"),
        measured={"epsilons": [s.epsilon for s in scs], "min_u_eps_minus_u": gaps},
        tolerance={"min": -1e-12 * ctx.mu}))
    for s in scs:
        checks.append(check_sup_convolution_regularity(s, ctx.u, ladder=scs))
    for s in scs:
        starts = omega_eps_starts(s, ctx.cfg.supconv_trajectories)
        checks.append(check_p_eps_monotone(s, starts, 0.02 * ctx.mu))
    return checks


def _suite_holder(ctx: _Context) -> list[CheckResult]:
    try:
        fit = holder_exponent_near_max(ctx.u, ctx.p)
    except InsufficientDataError as exc:
        return [CheckResult("holder_exponent", False, tag("holder_exponent"), details={"error": str(exc)})]
    dev = abs(fit.alpha - 1.0 / 3.0)
    return [CheckResult(
        "holder_exponent", dev <= 0.07, tag("holder_exponent"),
        measured={"alpha": fit.alpha, "stderr": fit.stderr, "deviation_from_one_third": dev},
        tolerance={"band": 0.07},
        details={"radii": fit.radii.tolist(), "max_gradient": fit.g.tolist()})]


_SUITES = {
    "pbounds": _suite_pbounds,
    "concavity": _suite_concavity,
    "flow": _suite_flow,
    "supconv": _suite_supconv,
    "holder": _suite_holder,
}


def run_suite(name: str, cfg: RunConfig, grid: Grid, sol: SolveResult, threads: int = 1) -> list[CheckResult]:
    """Run one suite (or every enabled suite for ``all``) on a solved field."""
    ctx = _Context(cfg, grid, sol, threads)
    if name == "all":
        names = [n for n in SUITE_NAMES if cfg.analysis.get(n, True)]
    elif name in _SUITES:
        names = [name]
    else:
        raise ConfigurationError(f"unknown suite {name!r}; choose from {', '.join(SUITE_NAMES)}, all")
    checks = []
    for n in names:
        logger.info("running suite %s", n)
        checks.extend(_SUITES[n](ctx))
    return checks


# -- commands ------------------------------------------------------------------


def cmd_solve(cfg: RunConfig) -> int:
    grid = build_grid(cfg.domain, cfg.resolution)
    sol = solve_dirichlet(cfg.domain, grid, cfg.solver)
    summary = _write_solve_artifacts(cfg, grid, sol)
    logger.info("mu %.6g (prediction %.6g), %d sweeps", summary["mu"], summary["predicted_mu"], sol.iterations)
    return EXIT_OK if sol.converged else EXIT_NOT_CONVERGED


def cmd_verify(cfg: RunConfig, suite: str) -> int:
    if suite != "all" and suite not in _SUITES:
        raise ConfigurationError(f"unknown suite {suite!r}; choose from {', '.join(SUITE_NAMES)}, all")
    threads = _threads()
    grid, sol, summary = _solve_or_load(cfg)
    if not sol.converged:
        logger.error("solver did not converge; see %s", cfg.output_dir / "solve.json")
        return EXIT_NOT_CONVERGED
    checks = run_suite(suite, cfg, grid, sol, threads)
    passed = all(c.passed for c in checks)
    report = {
        "kind": "verify",
        "suite": suite,
        "domain": domain_to_dict(cfg.domain),
        "resolution": cfg.resolution,
        "rng_seed": cfg.rng_seed,
        "passed": passed,
        "solve": _solve_block(summary),
        "checks": [c.to_dict() for c in checks],
    }
    write_json(cfg.output_dir / f"verify_{suite}.json", report, "verify")
    for c in checks:
        logger.info("%-28s %s", c.name, "pass" if c.passed else "FAIL")
    return EXIT_OK if passed else EXIT_FAILED


def cmd_serrin(cfg: RunConfig) -> int:
    grid, sol, _ = _solve_or_load(cfg)
    rep = serrin_diagnose(cfg.domain, cfg.resolution, cfg.solver, cfg.serrin_tolerances, solution=sol)
    doc = {"kind": "serrin", "domain": domain_to_dict(cfg.domain), **rep.to_dict()}
    if rep.cut_high_verdict:
        rec = stadium_reconstruct(cfg.domain, grid.h)
        if rec is not None:
            doc["reconstruction"] = {"shape": domain_to_dict(rec.shape), "boundary_hausdorff": rec.hausdorff}
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    write_json(cfg.output_dir / "serrin.json", doc, "serrin")
    logger.info("verdict %s", rep.verdict.value)
    return EXIT_INCONCLUSIVE if rep.verdict == Verdict.INCONCLUSIVE else EXIT_OK


def cmd_flow(cfg: RunConfig, starts=None) -> int:
    threads = _threads()
    if starts is not None:
        pts = np.asarray(starts, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(pts)) or np.any(cfg.domain.signed_distance(pts) <= 0):
            raise InvalidStartError("every start point must lie inside the domain")
    grid, sol, summary = _solve_or_load(cfg)
    if not sol.converged:
        return EXIT_NOT_CONVERGED
    ctx = _Context(cfg, grid, sol, threads)
    if starts is None:
        pts = _flow_starts(ctx)
    trajs, _ = _trajectories(ctx, pts, strict=True)
    checks, rows = _flow_checks(ctx, trajs)
    out = cfg.output_dir
    for k, (tr, row) in enumerate(zip(trajs, rows)):
        name = f"trajectory_{k:03d}.csv"
        write_trajectory_csv(out / name, tr)
        row["csv"] = name
    doc = {
        "kind": "flow",
        "domain": domain_to_dict(cfg.domain),
        "resolution": cfg.resolution,
        "solve": _solve_block(summary),
        "trajectories": rows,
        "checks": [c.to_dict() for c in checks],
    }
    write_json(out / "flow.json", doc, "flow")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAILED


def _write_points(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([f"{float(x) + 0.0:.17g}" for x in r])


def cmd_geometry(cfg: RunConfig) -> int:
    """Cut locus, high ridge and web-function samples as CSV (spacing h)."""
    grid = build_grid(cfg.domain, cfg.resolution)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    h = grid.h
    _write_points(out / "cut_locus.csv", ["x", "y"], cut_locus(cfg.domain).sample(h))
    _write_points(out / "high_ridge.csv", ["x", "y"], high_ridge(cfg.domain, h).sample(h))
    pts = grid.coords()[grid.inside_mask]
    phi = web_function(cfg.domain, pts)
    _write_points(out / "web_function.csv", ["x", "y", "phi"], np.column_stack([pts, phi]))
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------


def _point(text: str) -> list[float]:
    try:
        x, y = (float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y, got {text!r}") from None
    return [x, y]


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration (JSON)")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--resolution", type=int, help="grid resolution (overrides the config)")
    common.add_argument("--seed", type=int, help="rng seed (overrides the config)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    ap = argparse.ArgumentParser(prog="inflap", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, text in [("solve", "solve the Dirichlet problem and write fields"),
                       ("serrin", "overdetermined-problem diagnostics"),
                       ("geometry", "cut locus, high ridge and web function samples as CSV")]:
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("config_path", nargs="?", metavar="CONFIG")
    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("args", nargs="+", metavar="[CONFIG] SUITE",
                   help=f"suite is one of {', '.join(SUITE_NAMES)}, all")
    p = sub.add_parser("flow", parents=[common], help="integrate gradient-flow trajectories")
    p.add_argument("config_path", nargs="?", metavar="CONFIG")
    p.add_argument("--start", type=_point, action="append", metavar="X,Y",
                   help="start point (repeatable); default: boundary-adjacent starts")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify":
        if len(args.args) > 2:
            print("verify takes [CONFIG] SUITE", file=sys.stderr)
            return EXIT_CONFIG
        suite = args.args[-1]
        path = args.args[0] if len(args.args) == 2 else args.config
    else:
        path = args.config_path or args.config
    if path is None:
        print("a config file is required (positional or --config)", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(path, args.resolution, args.out, args.seed)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, suite)
        if args.command == "serrin":
            return cmd_serrin(cfg)
        if args.command == "flow":
            return cmd_flow(cfg, args.start)
        return cmd_geometry(cfg)
    except (ConfigurationError, InvalidStartError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InflapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
