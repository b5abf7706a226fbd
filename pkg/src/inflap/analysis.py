"""P-function, gradient flow, sup-convolutions and regularity diagnostics.

All checks return :class:`CheckResult` entries that serialize to plain dicts.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numba
import numpy as np
from scipy.ndimage import distance_transform_edt
from scipy.optimize import minimize_scalar

from .errors import ConfigurationError, InsufficientDataError, InvalidStartError
from .geometry import Domain, inradius
from .grid import ScalarField, VectorField, gradient
from .solver import boundary_gradient, infinity_laplacian_field
from .tags import tag

__all__ = [
    "CheckResult",
    "PField",
    "Termination",
    "Trajectory",
    "SupConvolution",
    "p_function",
    "check_p_bounds",
    "gradient_flow",
    "check_p_along_flow",
    "sup_convolution",
    "check_sup_convolution_regularity",
    "omega_eps_starts",
    "check_p_eps_monotone",
    "HolderFit",
    "holder_exponent_near_max",
    "max_set_mask",
    "write_trajectory_csv",
]


@dataclass
class CheckResult:
    """One pass/fail entry of a verification report."""

    name: str
    passed: bool
    tag: str
    measured: dict = field(default_factory=dict)
    tolerance: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "tag": self.tag,
            "measured": self.measured,
            "tolerance": self.tolerance,
            "details": self.details,
        }


# -- P-function ------------------------------------------------------------


@dataclass(frozen=True)
class PField:
    values: ScalarField
    min_boundary_quarter_grad: float
    max_u: float

    @property
    def spread(self) -> float:
        v = self.values.values
        return float(np.nanmax(v) - np.nanmin(v))


def _grad_norm(u: ScalarField) -> np.ndarray:
    return np.linalg.norm(gradient(u).values, axis=-1)


def p_function(u: ScalarField, domain: Domain, sample_count: int = 256) -> PField:
    """P = |grad u|^4/4 + u on nodes at least 2h inside, plus the bound endpoints."""
    grid = u.grid
    g = _grad_norm(u)
    vals = 0.25 * g**4 + u.values
    vals[~(grid.inside_mask & (grid.sd >= 2 * grid.h))] = np.nan
    bg = boundary_gradient(u, domain, sample_count)
    lo = float(np.min(0.25 * bg.values**4))
    return PField(ScalarField(grid, vals, dirichlet_zero=False), lo, float(np.nanmax(u.values)))


def check_p_bounds(p: PField, tol: float, worst: int = 5) -> CheckResult:
    """min over the boundary of |grad u|^4/4 - tol <= P <= max u + tol at every evaluated node."""
    grid = p.values.grid
    v = p.values.values
    ok = np.isfinite(v)
    lo, hi = p.min_boundary_quarter_grad - tol, p.max_u + tol
    excess = np.where(ok, np.maximum(lo - v, v - hi), -np.inf)
    bad = np.flatnonzero(excess.ravel() > 0)
    order = bad[np.argsort(-excess.ravel()[bad])][:worst]
    pts = grid.coords().reshape(-1, 2)
    return CheckResult(
        "p_bounds",
        len(bad) == 0,
        tag("p_bounds"),
        measured={
            "p_min": float(np.nanmin(v)),
            "p_max": float(np.nanmax(v)),
            "lower_bound": p.min_boundary_quarter_grad,
            "upper_bound": p.max_u,
            "evaluated_nodes": int(ok.sum()),
            "violations": int(len(bad)),
        },
        tolerance={"tol": float(tol)},
        details={"worst": [{"point": pts[k].tolist(), "P": float(v.ravel()[k])} for k in order]},
    )


# -- gradient flow -----------------------------------------------------------


class Termination(str, enum.Enum):
    REACHED_MAX_SET = "reached_max_set"
    LEFT_DOMAIN = "left_domain"
    STEP_LIMIT = "step_limit"
    GRADIENT_BELOW_TOL = "gradient_below_tol"


@dataclass(frozen=True)
class Trajectory:
    """Samples (t, x, y, u, |grad u|, P) of a forward gradient-flow path."""

    samples: np.ndarray
    start: np.ndarray
    terminated: Termination

    @property
    def t(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def points(self) -> np.ndarray:
        return self.samples[:, 1:3]

    @property
    def u(self) -> np.ndarray:
        return self.samples[:, 3]

    @property
    def gradnorm(self) -> np.ndarray:
        return self.samples[:, 4]

    @property
    def P(self) -> np.ndarray:
        return self.samples[:, 5]

    @property
    def arrival_time(self) -> float:
        """Time to reach the max set.

        The path stops at a small but nonzero gradient; along the web profile
        the remaining time equals |grad u|^2/2, which is added.
        """
        return float(self.t[-1] + 0.5 * self.gradnorm[-1] ** 2)


class _FlowField:
    """Bilinear interpolant of a node gradient field, usable one cell past the boundary."""

    def __init__(self, u: ScalarField):
        grid = u.grid
        self.grid = grid
        self.u = u
        self.u_full = u.extended()
        grad = gradient(u)
        self.g_full = np.stack([grid.extend(grad.values[..., k], False) for k in range(2)], axis=-1)
        self.max_grad = float(np.nanmax(np.linalg.norm(grad.values, axis=-1)))

    def inside(self, x) -> bool:
        return bool(self.grid.near_inside(np.asarray(x)[None])[0])

    def grad(self, x) -> np.ndarray:
        return self.grid.bilinear(self.g_full, np.asarray(x)[None])[0]

    def value(self, x) -> float:
        return float(self.grid.bilinear(self.u_full, np.asarray(x)[None])[0])


def gradient_flow(u: ScalarField, start, step: float | None = None, grad_tol: float | None = None,
                  t_max: float | None = None, max_level: float | None = None) -> Trajectory:
    """Integrate x' = grad u(x) with fixed-step RK4 from ``start``.

    Defaults: step h/(2 max|grad u|), grad_tol (3h)^{1/3} (the slope one cell
    from the max set for the web profile), t_max = 4 sqrt(max u) + 100 steps.
    A path that stops on the gradient test counts as having reached the max
    set when u there is within (3h)^{4/3} of ``max_level`` (max u by default).
    Only samples with strictly increasing u are kept; a step that fails to
    increase u ends the path.
    """
    flow = _FlowField(u)
    grid = u.grid
    h = grid.h
    x = np.asarray(start, dtype=float)
    if x.shape != (2,) or not np.all(np.isfinite(x)):
        raise InvalidStartError("start must be a finite 2-vector")
    if grid.domain.signed_distance(x[None])[0] <= 0 or not flow.inside(x):
        raise InvalidStartError(f"start {x.tolist()} is outside the domain")
    grad_tol = (3.0 * h) ** (1.0 / 3.0) if grad_tol is None else float(grad_tol)
    mu = float(np.nanmax(u.values)) if max_level is None else float(max_level)
    g0 = flow.grad(x)
    if not np.all(np.isfinite(g0)) or np.linalg.norm(g0) <= grad_tol:
        raise InvalidStartError(f"|grad u| at {x.tolist()} is below {grad_tol:.3g}")
    dt = h / (2.0 * flow.max_grad) if step is None else float(step)
    if t_max is None:
        t_max = 4.0 * math.sqrt(max(mu, 0.0)) + 100 * dt

    def row(t, p, g):
        val = flow.value(p)
        gn = float(np.linalg.norm(g))
        return [t, p[0], p[1], val, gn, 0.25 * gn**4 + val]

    samples = [row(0.0, x, g0)]
    t = 0.0
    status = Termination.STEP_LIMIT
    while t < t_max:
        k1 = flow.grad(x)
        k2 = flow.grad(x + 0.5 * dt * k1)
        k3 = flow.grad(x + 0.5 * dt * k2)
        k4 = flow.grad(x + dt * k3)
        xn = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(xn)) or not flow.inside(xn) or grid.domain.signed_distance(xn[None])[0] <= 0:
            status = Termination.LEFT_DOMAIN
            break
        gn = flow.grad(xn)
        r = row(t + dt, xn, gn)
        if r[3] <= samples[-1][3]:
            status = Termination.REACHED_MAX_SET if mu - samples[-1][3] <= (3 * h) ** (4 / 3) \
                else Termination.GRADIENT_BELOW_TOL
            break
        x, t = xn, t + dt
        samples.append(r)
        if r[4] <= grad_tol:
            status = Termination.REACHED_MAX_SET if mu - r[3] <= (3 * h) ** (4 / 3) \
                else Termination.GRADIENT_BELOW_TOL
            break
    return Trajectory(np.asarray(samples), np.asarray(start, dtype=float), status)


def _profile(t, lam, m):
    s = math.sqrt(max(lam - m, 0.0))
    return lam - np.clip(s - t, 0.0, None) ** 2


def check_p_along_flow(p: PField | None, traj: Trajectory, tol: float) -> CheckResult:
    """P drift along the path and agreement of u with lam - (sqrt(lam - m) - t)^2.

    lam starts at P(path start) and m = u(path start); lam is then refined by
    least squares, and the maximum deviation of the fitted profile is reported.
    ``p`` is accepted for symmetry with the other checks; the path carries its
    own P samples.
    """
    if len(traj.samples) < 10:
        raise InsufficientDataError("trajectory has fewer than 10 samples")
    P, t, uu = traj.P, traj.t, traj.u
    drift = float(np.max(np.abs(P - P[0])))
    lam0, m = float(P[0]), float(uu[0])

    def sse(lam):
        return float(np.sum((_profile(t, lam, m) - uu) ** 2))

    span = max(abs(lam0 - m), 1e-12)
    res = minimize_scalar(sse, bounds=(m, lam0 + span), method="bounded",
                          options={"xatol": 1e-12 * max(1.0, abs(lam0))})
    lam = float(res.x) if sse(res.x) < sse(lam0) else lam0
    dev = float(np.max(np.abs(_profile(t, lam, m) - uu)))
    dev0 = float(np.max(np.abs(_profile(t, lam0, m) - uu)))
    return CheckResult(
        "p_along_flow",
        drift <= tol and dev <= tol,
        tag("p_along_flow"),
        measured={"p_drift": drift, "profile_max_deviation": dev, "lambda_fit": lam,
                  "lambda_start": lam0, "profile_deviation_at_start_lambda": dev0,
                  "m": m, "arrival_time": traj.arrival_time, "samples": int(len(t))},
        tolerance={"tol": float(tol)},
        details={"terminated": traj.terminated.value},
    )


def write_trajectory_csv(path, traj: Trajectory) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "y", "u", "gradnorm", "P"])
        for r in traj.samples:
            w.writerow([f"{v + 0.0:.17g}" for v in r])


# -- sup-convolution -----------------------------------------------------------


@numba.njit(cache=True)
def _lower_envelope_1d(f, out, v, z):
    """out[q] = min_p f[p] + (q - p)^2 (lower envelope of parabolas)."""
    n = f.shape[0]
    k = -1
    for q in range(n):
        if not np.isfinite(f[q]):
            continue
        if k < 0:
            k = 0
            v[0] = q
            z[0] = -np.inf
            z[1] = np.inf
            continue
        while True:
            p = v[k]
            s = ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * q - 2.0 * p)
            if s <= z[k]:
                k -= 1
                if k < 0:
                    break
            else:
                break
        k += 1
        v[k] = q
        z[k] = -np.inf if k == 0 else s
        z[k + 1] = np.inf
    if k < 0:
        out[:] = np.inf
        return
    j = 0
    for q in range(n):
        while z[j + 1] < q:
            j += 1
        p = v[j]
        out[q] = (q - p) * (q - p) + f[p]


@numba.njit(cache=True)
def _envelope_2d(f):
    ny, nx = f.shape
    tmp = np.empty_like(f)
    out = np.empty_like(f)
    n = max(nx, ny)
    v = np.empty(n, dtype=np.int64)
    z = np.empty(n + 1)
    buf = np.empty(n)
    for j in range(ny):
        _lower_envelope_1d(f[j, :], tmp[j, :], v, z)
    for i in range(nx):
        col = tmp[:, i].copy()
        _lower_envelope_1d(col, buf[:ny], v, z)
        out[:, i] = buf[:ny]
    return out


def _lipschitz(u: ScalarField) -> float:
    return float(np.nanmax(_grad_norm(u)))


@dataclass(frozen=True)
class SupConvolution:
    epsilon: float
    u_eps: ScalarField
    U_eps_mask: np.ndarray
    A_eps_mask: np.ndarray
    Omega_eps_mask: np.ndarray
    m_eps: float
    R: float


def sup_convolution(u: ScalarField, epsilon: float) -> SupConvolution:
    """u_eps(x) = max over inside nodes y of u(y) - |x - y|^2/(2 eps), at every inside node.

    Exact on the lattice via two passes of the parabola lower envelope.
    Masks: U = {u > eps}, A = {x in U : dist(x, boundary of U) > eps R},
    Omega = {x in A : u_eps > m_eps} with m_eps the max of u_eps on the
    boundary nodes of A and R = 2 Lip(u).
    """
    grid = u.grid
    h = grid.h
    lip = _lipschitz(u)
    R = 2.0 * lip
    rho = inradius(grid.domain)
    if not (epsilon > 0) or epsilon >= rho / (4.0 * R):
        raise ConfigurationError(
            f"epsilon must lie in (0, rho/(4R)) = (0, {rho / (4 * R):.4g}); got {epsilon}")
    inside = grid.inside_mask
    scale = 2.0 * epsilon / (h * h)
    f = np.where(inside, -u.values * scale, np.inf)
    env = _envelope_2d(f)
    ueps = np.where(inside, -env / scale, np.nan)
    U = inside & (u.values > epsilon)
    # distance from a U node to the nearest node outside U, less half a cell
    dU = distance_transform_edt(U) * h - 0.5 * h
    A = U & (dU > epsilon * R)
    pad = np.pad(A, 1, constant_values=False)
    interior = pad[1:-1, 1:-1] & pad[2:, 1:-1] & pad[:-2, 1:-1] & pad[1:-1, 2:] & pad[1:-1, :-2]
    rim = A & ~interior
    m_eps = float(np.max(ueps[rim])) if rim.any() else float("nan")
    Omega = A & (ueps > m_eps) if rim.any() else np.zeros_like(A)
    return SupConvolution(float(epsilon), ScalarField(grid, ueps, dirichlet_zero=False), U, A, Omega, m_eps, R)


_STEPS = ((1, 0), (0, 1), (1, 1), (1, -1))


def _second_differences(values: np.ndarray, mask: np.ndarray, h: float) -> np.ndarray:
    """All axis and diagonal second differences centred on ``mask`` nodes."""
    ny, nx = values.shape
    jj, ii = np.nonzero(mask)
    out = []
    for di, dj in _STEPS:
        ok = (ii - di >= 0) & (ii + di < nx) & (jj - dj >= 0) & (jj + dj < ny)
        j, i = jj[ok], ii[ok]
        d2 = (values[j + dj, i + di] + values[j - dj, i - di] - 2 * values[j, i]) / ((di * di + dj * dj) * h * h)
        out.append(d2[np.isfinite(d2)])
    return np.concatenate(out) if out else np.empty(0)


def _semiconcavity_constant(u: ScalarField, eps: float) -> tuple[float, float]:
    """(C, M) with M the Lipschitz constant of u^{3/4} on {u > eps} and C = 4 eps^{-1/2} M^2 / 9."""
    g = _grad_norm(u)
    m = u.grid.inside_mask & (u.values > eps)
    M = float(np.nanmax(0.75 * u.values[m] ** -0.25 * g[m]))
    return 4.0 * eps**-0.5 * M * M / 9.0, M


def check_sup_convolution_regularity(sc: SupConvolution, u: ScalarField,
                                     ladder: Sequence[SupConvolution] | None = None,
                                     rel_tol: float = 0.05) -> CheckResult:
    """Semiconvexity, semiconcavity and convergence checks for u_eps.

    (a) second differences on Omega_eps >= -(1/eps)(1 + rel_tol);
    (b) second differences <= K (1 + rel_tol) with K = 2C/(2 - eps C);
    (c) over the ladder (default eps, eps/2, eps/4), max |u_eps - u| and
        max |grad u_eps - grad u| both strictly decrease. Both are measured on
        the Omega mask of the largest epsilon, which the smaller ones contain.
    The sign of -Delta u_eps - 1 on Omega_eps is reported, not checked.
    """
    grid = u.grid
    eps = sc.epsilon
    d2 = _second_differences(sc.u_eps.values, sc.Omega_eps_mask, grid.h)
    lower = -(1.0 / eps) * (1.0 + rel_tol)
    C, M = _semiconcavity_constant(u, eps)
    K = 2.0 * C / (2.0 - eps * C) if eps * C < 2 else math.inf
    upper = K * (1.0 + rel_tol)
    d2min = float(d2.min()) if d2.size else math.nan
    d2max = float(d2.max()) if d2.size else math.nan
    ok_a = bool(d2.size) and d2min >= lower
    ok_b = bool(d2.size) and d2max <= upper

    if ladder is None:
        ladder = [sc, sup_convolution(u, eps / 2), sup_convolution(u, eps / 4)]
    ladder = sorted(ladder, key=lambda s: -s.epsilon)
    common = ladder[0].Omega_eps_mask.copy()
    for s in ladder[1:]:
        common &= s.Omega_eps_mask
    gu = gradient(u).values
    value_gaps, grad_gaps = [], []
    for s in ladder:
        value_gaps.append(float(np.max(np.abs(s.u_eps.values - u.values)[common])) if common.any() else math.nan)
        ge = gradient(s.u_eps).values
        grad_gaps.append(float(np.max(np.linalg.norm(ge - gu, axis=-1)[common])) if common.any() else math.nan)
    dec = lambda a: all(x > y for x, y in zip(a, a[1:]))  # noqa: E731
    ok_c = common.any() and dec(value_gaps) and dec(grad_gaps)

    op = infinity_laplacian_field(sc.u_eps).values
    sub = sc.Omega_eps_mask & np.isfinite(op)
    sub_frac = float(np.mean(-op[sub] - 1.0 <= 1e-9)) if sub.any() else math.nan

    return CheckResult(
        "sup_convolution_regularity",
        ok_a and ok_b and ok_c,
        tag("sup_convolution_regularity"),
        measured={
            "epsilon": eps,
            "omega_nodes": int(sc.Omega_eps_mask.sum()),
            "second_difference_min": d2min,
            "second_difference_max": d2max,
            "semiconcavity_C": C,
            "lipschitz_u34": M,
            "semiconcavity_bound": K if math.isfinite(K) else None,
            "ladder_epsilons": [s.epsilon for s in ladder],
            "value_gaps": value_gaps,
            "gradient_gaps": grad_gaps,
            "subsolution_fraction": sub_frac,
        },
        tolerance={"semiconvex_lower": lower, "semiconcave_upper": upper if math.isfinite(upper) else None,
                   "rel_tol": rel_tol},
        details={"semiconvex": ok_a, "semiconcave": ok_b, "converging": bool(ok_c)},
    )


def omega_eps_starts(sc: SupConvolution, count: int = 32) -> np.ndarray:
    """``count`` boundary nodes of Omega_eps, evenly spread by angle about its centroid."""
    grid = sc.u_eps.grid
    om = sc.Omega_eps_mask
    pad = np.pad(om, 1, constant_values=False)
    inner = pad[1:-1, 1:-1] & pad[2:, 1:-1] & pad[:-2, 1:-1] & pad[1:-1, 2:] & pad[1:-1, :-2]
    rim = np.argwhere(om & ~inner)
    if len(rim) == 0:
        raise InsufficientDataError("Omega_eps is empty")
    pts = grid.coords()[rim[:, 0], rim[:, 1]]
    c = grid.coords()[om].mean(axis=0)
    ang = np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0])
    order = np.lexsort((pts[:, 1], pts[:, 0], ang))
    pick = order[np.linspace(0, len(order), count, endpoint=False).astype(int)]
    return pts[pick]


def check_p_eps_monotone(sc: SupConvolution, flow_starts, tol: float | None = None) -> CheckResult:
    """P_eps = |grad u_eps|^4/4 + u_eps must not drop by more than ``tol`` along each path.

    ``tol`` defaults to 0.02 max u_eps.
    """
    mu = float(np.nanmax(sc.u_eps.values))
    tol = 0.02 * mu if tol is None else float(tol)
    drops, lengths, ends = [], [], []
    skipped = 0
    for s in np.asarray(flow_starts, dtype=float):
        try:
            tr = gradient_flow(sc.u_eps, s)
        except InvalidStartError:
            skipped += 1
            continue
        P = tr.P
        drops.append(float(np.max(np.maximum.accumulate(P) - P)))
        lengths.append(len(P))
        ends.append(tr.terminated.value)
    worst = max(drops) if drops else math.nan
    return CheckResult(
        "p_eps_monotone",
        bool(drops) and worst <= tol,
        tag("p_eps_monotone"),
        measured={"epsilon": sc.epsilon, "trajectories": len(drops), "skipped_starts": skipped,
                  "worst_drop": worst, "drops": drops},
        tolerance={"tol": tol},
        details={"terminations": ends, "samples": lengths},
    )


# -- regularity near the max set -----------------------------------------------


@dataclass(frozen=True)
class HolderFit:
    alpha: float
    stderr: float
    radii: np.ndarray
    g: np.ndarray

    @property
    def band(self) -> tuple[float, float]:
        """95% confidence band of the slope."""
        return self.alpha - 1.96 * self.stderr, self.alpha + 1.96 * self.stderr


def max_set_mask(u: ScalarField) -> np.ndarray:
    """Nodes within about h/2 of the max set: u >= mu - mu (h/rho)^{4/3}/2."""
    grid = u.grid
    mu = float(np.nanmax(u.values))
    rho = inradius(grid.domain)
    tau = 0.5 * mu * (grid.h / rho) ** (4.0 / 3.0)
    return grid.inside_mask & (u.values >= mu - tau)


def holder_exponent_near_max(u: ScalarField, p: PField | None = None,
                             fit_radii: Sequence[float] | None = None) -> HolderFit:
    """Slope of log g(r) against log r, g(r) = max |grad u| over nodes with dist(x, K) <= r.

    K is localized by :func:`max_set_mask`. Default radii are rho/8..rho/2
    in factors of sqrt 2. Radii tied to h (say 4h..32h) would see the same
    discretization error near K at every resolution, so the estimate could not
    improve under refinement. Radii below h or beyond rho/2 are dropped.
    """
    grid = u.grid
    h = grid.h
    K = max_set_mask(u)
    dist = distance_transform_edt(~K) * h
    gn = _grad_norm(u)
    rho = inradius(grid.domain)
    if fit_radii is None:
        fit_radii = [rho * 2 ** (-k / 2) for k in range(2, 7)]
    usable_r, gs = [], []
    for r in fit_radii:
        if r < h or r > 0.5 * rho:
            continue
        sel = grid.inside_mask & (dist <= r) & np.isfinite(gn)
        if not sel.any():
            continue
        g = float(np.max(gn[sel]))
        if g > 0:
            usable_r.append(float(r))
            gs.append(g)
    if len(usable_r) < 3:
        raise InsufficientDataError(f"only {len(usable_r)} usable radii")
    x, y = np.log(usable_r), np.log(gs)
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(len(x) - 2, 1)
    s2 = float(resid @ resid) / dof
    stderr = math.sqrt(s2 / float(np.sum((x - x.mean()) ** 2)))
    return HolderFit(float(coef[0]), stderr, np.array(usable_r), np.array(gs))
