"""Overdetermined-problem diagnostics.

A domain on which -Delta_inf u = 1, u = 0 on the boundary also admits a
constant normal derivative |grad u| = a must be a web domain: u is the web
function, a = (3 rho)^{1/3}, and the cut locus equals the high ridge. The
report measures each of these quantities on a numerical solution and turns
them into a verdict with resolution-aware tolerances.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .analysis import p_function
from .errors import ConfigurationError, InvalidInputError
from .geometry import (
    Ball,
    ConvexPolygon,
    Domain,
    Ellipse,
    Stadium,
    _hausdorff,
    cut_equals_high_ridge,
    diametral_ball_check,
    inradius,
    web_function,
)
from .grid import Grid, ScalarField, build_grid
from .solver import SolveResult, SolverConfig, boundary_gradient, solve_dirichlet
from .tags import tag

logger = logging.getLogger(__name__)

__all__ = [
    "Verdict",
    "SerrinTolerances",
    "SerrinReport",
    "WebAgreement",
    "Reconstruction",
    "serrin_diagnose",
    "web_agreement",
    "stadium_reconstruct",
    "hypothesis_flags",
]


class Verdict(str, enum.Enum):
    CONSISTENT = "consistent_web_domain"
    INCONSISTENT = "inconsistent"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class SerrinTolerances:
    """Verdict tolerances at ``reference_resolution``; they scale linearly with h.

    ``min_inradius_cells``: below this many cells across the inradius the
    verdict is inconclusive regardless of the measurements.
    """

    a: float = 0.05
    p: float = 0.05
    reference_resolution: int = 128
    min_inradius_cells: float = 16.0

    def __post_init__(self):
        if not (self.a > 0 and self.p > 0):
            raise ConfigurationError("verdict tolerances must be positive")
        if self.reference_resolution < 16:
            raise ConfigurationError("reference_resolution must be >= 16")
        if not (self.min_inradius_cells >= 4):
            raise ConfigurationError("min_inradius_cells must be >= 4")

    def scaled(self, resolution: int) -> tuple[float, float]:
        """(tol_a, tol_P as a fraction of max u) at ``resolution``."""
        f = self.reference_resolution / resolution
        return self.a * f, self.p * f

    @classmethod
    def from_dict(cls, d: dict) -> "SerrinTolerances":
        extra = set(d) - {"a", "p", "reference_resolution", "min_inradius_cells"}
        if extra:
            raise ConfigurationError(f"unknown serrin tolerance options: {sorted(extra)}")
        return cls(**d)


@dataclass(frozen=True)
class WebAgreement:
    linf: float
    l2: float
    nodes: int


def web_agreement(u: ScalarField, domain: Domain) -> WebAgreement:
    """Relative L-inf and RMS deviation of u from the web function.

    Nodes closer than 2h to the boundary are skipped; both norms are divided
    by max u.
    """
    grid = u.grid
    sel = grid.inside_mask & (grid.sd >= 2 * grid.h) & np.isfinite(u.values)
    if not sel.any():
        raise InvalidInputError("no nodes at least 2h inside the domain")
    phi = web_function(domain, grid.coords()[sel])
    diff = u.values[sel] - phi
    mu = float(np.nanmax(u.values))
    return WebAgreement(
        float(np.max(np.abs(diff)) / mu),
        float(np.sqrt(np.mean(diff**2)) / mu),
        int(sel.sum()),
    )


@dataclass(frozen=True)
class Reconstruction:
    """Stadium (or Ball) fitted to the high ridge, with its boundary distance to the input."""

    shape: Domain
    hausdorff: float
    samples: int


def stadium_reconstruct(domain: Domain, h: float | None = None,
                        sample_count: int = 2048) -> Reconstruction | None:
    """Fit a segment to the high ridge and rebuild {dist(x, S) < rho}.

    High-ridge samples are the nodes of an h-lattice with d >= rho - h. The
    segment is their principal axis clipped to the extreme projections; it
    collapses to a point when shorter than 2h. Returns None when the cut
    locus and the high ridge differ by more than 2h.
    """
    rho = inradius(domain)
    h = rho / 32.0 if h is None else float(h)
    if not h > 0:
        raise InvalidInputError("h must be positive")
    same, _ = cut_equals_high_ridge(domain, 2 * h)
    if not same:
        return None
    xmin, xmax, ymin, ymax = domain.bbox()
    cx, cy = 0.5 * (xmin + xmax), 0.5 * (ymin + ymax)
    nx = int(np.ceil((xmax - xmin) / (2 * h))) + 1
    ny = int(np.ceil((ymax - ymin) / (2 * h))) + 1
    X, Y = np.meshgrid(cx + h * np.arange(-nx, nx + 1), cy + h * np.arange(-ny, ny + 1))
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    ridge = pts[domain.signed_distance(pts) >= rho - h]
    if len(ridge) == 0:
        ridge = domain.high_ridge_locus().sample(h)
    center = ridge.mean(axis=0)
    if len(ridge) >= 2:
        _, _, vt = np.linalg.svd(ridge - center, full_matrices=False)
        axis = vt[0]
    else:
        axis = np.array([1.0, 0.0])
    t = (ridge - center) @ axis
    if t.max() - t.min() <= 2 * h:
        shape: Domain = Ball(tuple(map(float, center)), rho)
    else:
        shape = Stadium(tuple(map(float, center + t.min() * axis)), tuple(map(float, center + t.max() * axis)), rho)
    a, _ = shape.boundary_samples(sample_count)
    b, _ = domain.boundary_samples(sample_count)
    return Reconstruction(shape, _hausdorff(a, b), int(len(ridge)))


def hypothesis_flags(domain: Domain) -> list[str]:
    """Standing hypotheses carried by a run.

    Analytic shapes are convex with an interior sphere at every boundary
    point; polygon corners have none. Boundary C^1 regularity of u is never
    certified, so it is always an assumption.
    """
    flags = [] if isinstance(domain, ConvexPolygon) else ["hΩ_ok"]
    flags.append("Hu_assumed")
    return flags


@dataclass
class SerrinReport:
    boundary_grad_mean: float
    boundary_grad_relative_spread: float
    boundary_grad_min: float
    boundary_grad_max: float
    predicted_a: float
    p_spread: float
    cut_high_verdict: bool
    cut_high_hausdorff: float
    diametral_ball: bool
    hypothesis_flags: list
    verdict: Verdict
    mu: float
    rho: float
    resolution: int
    h: float
    web_linf: float
    web_l2: float
    tolerances: dict
    solver: dict
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if self.verdict == Verdict.CONSISTENT and not self.cut_high_verdict:
            raise ValueError("a consistent verdict requires cut locus = high ridge")

    @property
    def a(self) -> float:
        return self.boundary_grad_mean

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "boundary_grad_mean": self.boundary_grad_mean,
            "boundary_grad_relative_spread": self.boundary_grad_relative_spread,
            "boundary_grad_min": self.boundary_grad_min,
            "boundary_grad_max": self.boundary_grad_max,
            "predicted_a": self.predicted_a,
            "a_relative_error": abs(self.boundary_grad_mean - self.predicted_a) / self.predicted_a,
            "p_spread": self.p_spread,
            "cut_high_verdict": self.cut_high_verdict,
            "cut_high_hausdorff": self.cut_high_hausdorff,
            "diametral_ball": self.diametral_ball,
            "hypothesis_flags": list(self.hypothesis_flags),
            "mu": self.mu,
            "rho": self.rho,
            "resolution": self.resolution,
            "h": self.h,
            "web_linf": self.web_linf,
            "web_l2": self.web_l2,
            "tolerances": self.tolerances,
            "solver": self.solver,
            "notes": list(self.notes),
            "paper_tags": [
                {"field": "boundary_grad_mean", "tag": tag("serrin_boundary_gradient")},
                {"field": "boundary_grad_relative_spread", "tag": tag("serrin_boundary_gradient")},
                {"field": "predicted_a", "tag": tag("serrin_predicted_a")},
                {"field": "p_spread", "tag": tag("serrin_p_spread")},
                {"field": "cut_high_verdict", "tag": tag("serrin_cut_high")},
                {"field": "diametral_ball", "tag": tag("serrin_diametral_ball")},
                {"field": "web_linf", "tag": tag("web_agreement")},
            ],
        }


def _decide(converged: bool, under_resolved: bool, spread: float, p_spread: float, a: float,
            pred: float, cut_high: bool, diametral: bool, tol_a: float, tol_p: float) -> Verdict:
    if not converged or under_resolved:
        return Verdict.INCONCLUSIVE
    if spread <= tol_a and p_spread <= tol_p and cut_high and abs(a - pred) <= tol_a * a:
        return Verdict.CONSISTENT
    if spread > 2 * tol_a or (diametral and not cut_high):
        return Verdict.INCONSISTENT
    return Verdict.INCONCLUSIVE


def serrin_diagnose(domain: Domain, resolution: int, config: SolverConfig | None = None,
                    tols: SerrinTolerances | None = None, solution: SolveResult | None = None,
                    sample_count: int = 256) -> SerrinReport:
    """Solve (or reuse ``solution``) and classify the domain.

    consistent_web_domain: boundary-gradient spread <= tol_a, P spread <=
    tol_P, cut locus = high ridge within 2h, and a within tol_a of
    (3 rho)^{1/3}. inconsistent: spread > 2 tol_a, or cut locus != high ridge
    although a diametral inner ball exists. Anything else, a non-converged
    solve, or fewer than ``min_inradius_cells`` cells across the inradius is
    inconclusive.
    """
    tols = tols or SerrinTolerances()
    config = config or SolverConfig()
    if solution is None:
        grid: Grid = build_grid(domain, resolution)
        solution = solve_dirichlet(domain, grid, config)
    else:
        grid = solution.u.grid
    h = grid.h
    rho = inradius(domain)
    u = solution.u
    mu = float(np.nanmax(u.values))
    tol_a, tol_p_frac = tols.scaled(resolution)
    tol_p = tol_p_frac * mu

    bg = boundary_gradient(u, domain, sample_count)
    spread = bg.relative_spread
    a = bg.mean
    pred = (3.0 * rho) ** (1.0 / 3.0)
    p = p_function(u, domain, sample_count)
    cut_high, haus = cut_equals_high_ridge(domain, 2 * h)
    diametral, _ = diametral_ball_check(domain, 2 * h)
    web = web_agreement(u, domain)
    under = rho < tols.min_inradius_cells * h

    notes = []
    if under:
        notes.append(f"under-resolved: inradius spans {rho / h:.1f} cells")
    if not solution.converged:
        notes.append("solver did not converge")
    if isinstance(domain, (Ball, Ellipse)):
        notes.append("C2 boundary family: a consistent verdict is only possible for a ball")
    if isinstance(domain, ConvexPolygon):
        notes.append("hypothesis (H_u) unverified")
    if not diametral:
        notes.append("no diametral inner ball found; the geometric conclusion is not covered")

    verdict = _decide(solution.converged, under, spread, p.spread, a, pred, bool(cut_high),
                      bool(diametral), tol_a, tol_p)
    logger.info("serrin verdict %s (spread %.4f, a %.4f vs %.4f)", verdict.value, spread, a, pred)
    return SerrinReport(
        boundary_grad_mean=a,
        boundary_grad_relative_spread=spread,
        boundary_grad_min=float(bg.values.min()),
        boundary_grad_max=float(bg.values.max()),
        predicted_a=pred,
        p_spread=p.spread,
        cut_high_verdict=bool(cut_high),
        cut_high_hausdorff=float(haus),
        diametral_ball=bool(diametral),
        hypothesis_flags=hypothesis_flags(domain),
        verdict=verdict,
        mu=mu,
        rho=rho,
        resolution=int(resolution),
        h=h,
        web_linf=web.linf,
        web_l2=web.l2,
        tolerances={
            "tol_a": tol_a,
            "tol_P": tol_p,
            "cut_high_hausdorff": 2 * h,
            "diametral": 2 * h,
            "min_inradius_cells": tols.min_inradius_cells,
        },
        solver={
            "converged": bool(solution.converged),
            "iterations": int(solution.iterations),
            "final_residual": float(solution.final_residual),
        },
        notes=notes,
    )
