"""Viscosity solution of -Delta_inf u = 1 in a convex domain, u = 0 on the boundary.

Away from critical points the operator is the second derivative along the
gradient direction, scaled by |p|^2:

    Delta_inf u(x) ~ p^T D2_h u p,

with p the cut-cell (Shortley-Weller) gradient, u_xx and u_yy from the
non-uniform three-point formula and u_xy from the ghost-extended corners.
Reading U(x +- h p/|p|) off a bilinear interpolant instead would be off by
O(1): the interpolation error is O(h^2) and gets divided by h^2.

Where |p| is small, or the node is a crease (an extremum along an axis, as on
the ridge of a stadium), the direction is unreliable and a fallback over 16
directions takes over:

    q^2 (M + m - 2 u(x)) / h^2,

with M, m the extreme values of the bilinear interpolant on the circle of
radius h and q = max(M - u, u - m) / h the steepest one-sided slope. The
two values are blended continuously between the regimes.

The discrete problem is relaxed by explicit pseudo-time marching with a local
step size, started from the web function. A heavy-ball term (``momentum``)
cuts the sweep count from O(N^2) to about O(N); it is reset whenever it points
against the residual. ``momentum=0`` gives plain forward-Euler marching.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import ConfigurationError
from .geometry import Domain, web_function
from .grid import Grid, ScalarField, interpolate

logger = logging.getLogger(__name__)

__all__ = [
    "SolverConfig",
    "SolveResult",
    "BoundaryGradient",
    "discrete_infinity_laplacian",
    "infinity_laplacian_field",
    "solve_dirichlet",
    "residual_field",
    "boundary_gradient",
]

N_DIRECTIONS = 16
# crease ratio window (smaller one-sided slope over |p|) for the blend
CREASE_LO = 0.2
CREASE_HI = 0.4


@dataclass(frozen=True)
class SolverConfig:
    residual_tol: float = 1e-4
    max_iters: int = 500_000
    pseudo_dt_safety: float = 0.5
    degenerate_gradient_tol: float | str = "auto"
    momentum: float = 0.97

    def __post_init__(self):
        if not (self.residual_tol > 0):
            raise ConfigurationError("residual_tol must be positive")
        if int(self.max_iters) < 1:
            raise ConfigurationError("max_iters must be >= 1")
        if not (0 < self.pseudo_dt_safety <= 1):
            raise ConfigurationError("pseudo_dt_safety must lie in (0, 1]")
        tol = self.degenerate_gradient_tol
        if isinstance(tol, str):
            if tol != "auto":
                raise ConfigurationError("degenerate_gradient_tol must be a number or 'auto'")
        elif not (tol > 0):
            raise ConfigurationError("degenerate_gradient_tol must be positive")
        if not (0 <= self.momentum < 1):
            raise ConfigurationError("momentum must lie in [0, 1)")

    def gradient_tol(self, h: float) -> float:
        if self.degenerate_gradient_tol == "auto":
            return h ** (1.0 / 3.0) / 10.0
        return float(self.degenerate_gradient_tol)

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        known = {"residual_tol", "max_iters", "pseudo_dt_safety", "degenerate_gradient_tol", "momentum"}
        extra = set(d) - known
        if extra:
            raise ConfigurationError(f"unknown solver options: {sorted(extra)}")
        kw = dict(d)
        if "max_iters" in kw:
            kw["max_iters"] = int(kw["max_iters"])
        return cls(**kw)

    def to_dict(self) -> dict:
        return {
            "residual_tol": self.residual_tol,
            "max_iters": self.max_iters,
            "pseudo_dt_safety": self.pseudo_dt_safety,
            "degenerate_gradient_tol": self.degenerate_gradient_tol,
            "momentum": self.momentum,
        }


@dataclass(frozen=True)
class SolveResult:
    u: ScalarField
    iterations: int
    final_residual: float
    converged: bool
    diagnostics: dict = field(default_factory=dict)


@numba.njit(cache=True, inline="always")
def _bilin(uf, nx, x0, y0, h, px, py):
    fx = (px - x0) / h
    fy = (py - y0) / h
    i = int(math.floor(fx))
    j = int(math.floor(fy))
    tx = fx - i
    ty = fy - j
    b = j * nx + i
    return ((1 - tx) * (1 - ty) * uf[b] + tx * (1 - ty) * uf[b + 1]
            + (1 - tx) * ty * uf[b + nx] + tx * ty * uf[b + nx + 1])


@numba.njit(cache=True)
def _fallback(uf, n, nx, x0, y0, h):
    j = n // nx
    i = n - j * nx
    px = x0 + i * h
    py = y0 + j * h
    u0 = uf[n]
    vmax = -1e300
    vmin = 1e300
    for d in range(N_DIRECTIONS):
        t = 2.0 * math.pi * d / N_DIRECTIONS
        v = _bilin(uf, nx, x0, y0, h, px + h * math.cos(t), py + h * math.sin(t))
        vmax = max(vmax, v)
        vmin = min(vmin, v)
    q = max(abs(vmax - u0), abs(u0 - vmin)) / h
    return q * q * (vmax + vmin - 2.0 * u0) / (h * h), 1.5 * q * q


@numba.njit(cache=True)
def _operator(uf, nodes, nbr, arm, nx, x0, y0, h, grad_tol, crease_lo, crease_hi, op, rate):
    """Discrete operator at ``nodes`` of the extended flat array ``uf``.

    ``nbr``/``arm`` hold, per node, the neighbour index (-1 = boundary at
    distance arm) for +x, -x, +y, -y. ``rate`` receives the effective squared
    slope that sets the local explicit step (|p|^2 away from cut cells).

    The direction-aligned value is blended into the fallback as |p| drops
    from 2*grad_tol to grad_tol, and as the node turns into a crease: an
    extremum along an axis whose smaller one-sided slope s satisfies
    s/|p| > crease_lo (pure fallback at crease_hi). The blend keeps the
    operator continuous in u, which the pseudo-time iteration needs.
    """
    g = np.empty(2)
    d2 = np.empty(2)
    stiff = np.empty(2)
    for k in range(nodes.shape[0]):
        n = nodes[k]
        u0 = uf[n]
        s = 0.0
        for ax in range(2):
            ip = nbr[k, 2 * ax]
            im = nbr[k, 2 * ax + 1]
            hp = arm[k, 2 * ax]
            hm = arm[k, 2 * ax + 1]
            up = uf[ip] if ip >= 0 else 0.0
            um = uf[im] if im >= 0 else 0.0
            sp = (up - u0) / hp
            sm = (u0 - um) / hm
            g[ax] = (hm * sp + hp * sm) / (hm + hp)
            d2[ax] = 2.0 * (sp - sm) / (hp + hm)
            stiff[ax] = h * h / (hp * hm)
            if sp * sm < 0.0:
                s = max(s, min(abs(sp), abs(sm)))
        pn = math.sqrt(g[0] * g[0] + g[1] * g[1])
        w = min(max(pn / grad_tol - 1.0, 0.0), 1.0)
        if w > 0.0 and s > 0.0:
            w *= min(max((crease_hi - s / pn) / (crease_hi - crease_lo), 0.0), 1.0)
        reg = 0.0
        reg_rate = 0.0
        if w > 0.0:
            uxy = (uf[n + nx + 1] - uf[n + nx - 1] - uf[n - nx + 1] + uf[n - nx - 1]) / (4.0 * h * h)
            reg = g[0] * g[0] * d2[0] + 2.0 * g[0] * g[1] * uxy + g[1] * g[1] * d2[1]
            reg_rate = g[0] * g[0] * stiff[0] + g[1] * g[1] * stiff[1]
        if w < 1.0:
            deg, deg_rate = _fallback(uf, n, nx, x0, y0, h)
            op[k] = w * reg + (1.0 - w) * deg
            rate[k] = max(reg_rate, deg_rate)
        else:
            op[k] = reg
            rate[k] = reg_rate
    return op


class _Stencil:
    """Flat-index stencil data shared by the sweep and the residual."""

    def __init__(self, grid: Grid):
        self.grid = grid
        st = grid._gradient_stencil
        self.nodes = grid.inside_index.astype(np.int64)
        self.nbr = np.stack([st[k][0] for k in ("xp", "xm", "yp", "ym")], axis=1).astype(np.int64)
        self.arm = np.stack([st[k][1] for k in ("xp", "xm", "yp", "ym")], axis=1)
        self.interior = grid.sd.ravel()[self.nodes] > 2 * grid.h
        self.gidx, self.G, _ = grid._ghost

    def extend(self, flat_inside_values: np.ndarray, uf: np.ndarray) -> np.ndarray:
        uf[self.nodes] = flat_inside_values
        uf[self.gidx] = self.G @ uf
        return uf

    def apply(self, uf: np.ndarray, grad_tol: float):
        g = self.grid
        op = np.empty(len(self.nodes))
        rate = np.empty(len(self.nodes))
        _operator(uf, self.nodes, self.nbr, self.arm, g.nx, g.origin[0], g.origin[1], g.h,
                  grad_tol, CREASE_LO, CREASE_HI, op, rate)
        return op, rate


def _blank(grid: Grid) -> np.ndarray:
    return np.zeros(grid.nx * grid.ny)


def infinity_laplacian_field(u: ScalarField, degenerate_gradient_tol: float | None = None) -> ScalarField:
    """Discrete operator at every inside node (NaN outside)."""
    grid = u.grid
    tol = SolverConfig().gradient_tol(grid.h) if degenerate_gradient_tol is None else degenerate_gradient_tol
    st = _Stencil(grid)
    uf = st.extend(u.values.ravel()[st.nodes], _blank(grid))
    op, _ = st.apply(uf, tol)
    out = np.full(grid.nx * grid.ny, np.nan)
    out[st.nodes] = op
    return ScalarField(grid, out.reshape(grid.shape), dirichlet_zero=False)


def discrete_infinity_laplacian(u: ScalarField, node, degenerate_gradient_tol: float | None = None) -> float:
    """Operator value at one inside node given as (i, j)."""
    grid = u.grid
    i, j = node
    if not grid.inside_mask[j, i]:
        raise ConfigurationError(f"node {node} is not inside the domain")
    return float(infinity_laplacian_field(u, degenerate_gradient_tol).values[j, i])


def residual_field(u: ScalarField, degenerate_gradient_tol: float | None = None) -> ScalarField:
    """|Delta_h u + 1| per node; NaN outside and within 2h of the boundary."""
    grid = u.grid
    r = np.abs(infinity_laplacian_field(u, degenerate_gradient_tol).values + 1.0)
    r[~(grid.inside_mask & (grid.sd > 2 * grid.h))] = np.nan
    return ScalarField(grid, r, dirichlet_zero=False)


def solve_dirichlet(domain: Domain, grid: Grid, config: SolverConfig | None = None,
                    initial: np.ndarray | None = None) -> SolveResult:
    """March u <- u + dt (Delta_h u + 1) from the web function until the residual is small.

    The residual is measured on nodes farther than 2h from the boundary. A
    run that hits ``max_iters`` returns ``converged=False`` with diagnostics.
    """
    config = config or SolverConfig()
    if domain is not grid.domain and domain != grid.domain:
        raise ConfigurationError("grid was built for a different domain")
    rho = domain.inradius()
    if rho < 4 * grid.h:
        raise ConfigurationError("inradius below 4h")
    st = _Stencil(grid)
    h = grid.h
    tol = config.gradient_tol(h)
    # slope scale |grad u| ~ dist^{1/3} one cell away from the max set
    floor = h ** (2.0 / 3.0)
    if initial is None:
        pts = grid.coords().reshape(-1, 2)[st.nodes]
        u = np.asarray(web_function(domain, pts), dtype=float)
    else:
        u = np.asarray(initial, dtype=float).ravel()[st.nodes].copy()
    uf = _blank(grid)
    safety = config.pseudo_dt_safety
    beta = config.momentum
    velocity = np.zeros_like(u)
    res = math.inf
    it = 0
    restarts = 0
    history = []
    while True:
        st.extend(u, uf)
        op, rate = st.apply(uf, tol)
        r = op + 1.0
        res = float(np.max(np.abs(r[st.interior])))
        if it % 500 == 0:
            history.append((it, res))
            logger.debug("sweep %d residual %.3e", it, res)
        if not math.isfinite(res) or res <= config.residual_tol or it >= config.max_iters:
            break
        dt = safety * h * h / (4.0 * np.maximum(rate, floor))
        if beta > 0:
            # heavy-ball marching; drop the velocity when it opposes the residual
            if float(np.dot(velocity, r)) < 0.0:
                velocity[:] = 0.0
                restarts += 1
            velocity *= beta
            velocity += dt * r
            u = u + velocity
        else:
            u = u + dt * r
        it += 1
    converged = res <= config.residual_tol
    if not converged:
        logger.warning("solver stopped after %d sweeps with residual %.3e", it, res)
    vals = np.full(grid.nx * grid.ny, np.nan)
    vals[st.nodes] = u
    diagnostics = {
        "residual_history": history,
        "momentum_restarts": restarts,
        "min_u": float(u.min()),
        "max_u": float(u.max()),
        "degenerate_gradient_tol": tol,
    }
    return SolveResult(ScalarField(grid, vals.reshape(grid.shape)), it, res, converged, diagnostics)


@dataclass(frozen=True)
class BoundaryGradient:
    points: np.ndarray
    normals: np.ndarray
    values: np.ndarray
    skipped: int

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def relative_spread(self) -> float:
        return float((self.values.max() - self.values.min()) / self.values.mean())


def boundary_gradient(u: ScalarField, domain: Domain, sample_count: int = 256) -> BoundaryGradient:
    """|grad u| at equally spaced boundary points from inward one-sided differences.

    Uses u(y) = 0 and interpolated u at y + s nu, s = h, 2h, 3h (cubic through
    the four values, derivative at s = 0).
    """
    if sample_count < 64:
        raise ConfigurationError("sample_count must be >= 64")
    grid = u.grid
    h = grid.h
    pts, nrm = domain.boundary_samples(sample_count)
    probes = pts[:, None, :] + h * np.arange(1, 4)[None, :, None] * nrm[:, None, :]
    ok = np.all(grid.inside_mask.ravel()[grid._bilinear_stencil(probes[:, 2])[0]].any(axis=1)[:, None]
                & (domain.signed_distance(probes) > 0), axis=1)
    vals = interpolate(u, probes[ok])
    est = (18.0 * vals[:, 0] - 9.0 * vals[:, 1] + 2.0 * vals[:, 2]) / (6.0 * h)
    return BoundaryGradient(pts[ok], nrm[ok], est, int(np.sum(~ok)))
