"""Uniform Cartesian grids over a convex domain and fields living on them.

Arrays are indexed ``[j, i]`` with node (i, j) at ``origin + (i*h, j*h)``, so
row ``j`` is the horizontal line ``y = y0 + j*h``. Values are NaN on nodes
outside the domain.

Dirichlet-zero fields (u, d, u^{3/4}, ...) are extended past the boundary by
ghost values: for an outside node o with projection y and inward unit
direction nu = (y - o)/|y - o|, the ghost is the quadratic through
(0, 0), (2h, U(y + 2h nu)), (3h, U(y + 3h nu)) evaluated at -|d(o)|. The map
is linear in the inside values and precomputed as a sparse matrix. Bilinear
interpolation over the extended array then vanishes on the boundary to
second order instead of staircasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.ndimage import distance_transform_edt
from scipy.spatial import ConvexHull, QhullError

from .errors import ConfigurationError, DomainError, UnsupportedError
from .geometry import Domain, inradius

__all__ = [
    "Grid",
    "ScalarField",
    "VectorField",
    "DeficitResult",
    "build_grid",
    "gradient",
    "interpolate",
    "convex_envelope",
    "midpoint_concavity_deficit",
    "write_field",
    "read_field",
]

MARGIN = 3
GHOST_DEPTH = 3.0  # in units of h


class Grid:
    """Node lattice plus the masks and cut-cell data derived from a domain."""

    def __init__(self, domain: Domain, nx: int, ny: int, h: float, origin):
        self.domain = domain
        self.nx, self.ny, self.h = int(nx), int(ny), float(h)
        self.origin = np.asarray(origin, dtype=float)
        self.sd = domain.signed_distance(self.coords())
        self.inside_mask = self.sd > 0
        self.theta = self._cut_cells()

    def coords(self) -> np.ndarray:
        xs = self.origin[0] + self.h * np.arange(self.nx)
        ys = self.origin[1] + self.h * np.arange(self.ny)
        X, Y = np.meshgrid(xs, ys)
        return np.stack([X, Y], axis=-1)

    @property
    def shape(self):
        return (self.ny, self.nx)

    @cached_property
    def inside_index(self) -> np.ndarray:
        return np.flatnonzero(self.inside_mask.ravel())

    def node_point(self, i: int, j: int) -> np.ndarray:
        return self.origin + self.h * np.array([i, j], dtype=float)

    def _cut_cells(self) -> dict:
        """Fraction theta in (0, 1] of the arm to the boundary in each axis direction.

        theta = 1 where the neighbour is inside; the crossing is bracketed by
        bisection of the signed distance along the axis.
        """
        inside = self.inside_mask
        pts = self.coords()
        out = {}
        for name, (di, dj) in {"xp": (1, 0), "xm": (-1, 0), "yp": (0, 1), "ym": (0, -1)}.items():
            # margin nodes are outside, so the wrap-around of roll is harmless
            nb = np.roll(inside, shift=(-dj, -di), axis=(0, 1))
            theta = np.where(inside, 1.0, np.nan)
            cut = inside & ~nb
            if np.any(cut):
                p = pts[cut]
                step = self.h * np.array([di, dj], dtype=float)
                lo = np.zeros(len(p))
                hi = np.ones(len(p))
                for _ in range(48):
                    mid = 0.5 * (lo + hi)
                    pos = self.domain.signed_distance(p + mid[:, None] * step) > 0
                    lo = np.where(pos, mid, lo)
                    hi = np.where(pos, hi, mid)
                theta[cut] = np.maximum(0.5 * (lo + hi), 1e-12)
            out[name] = theta
        return out

    # -- ghost extension -------------------------------------------------

    @cached_property
    def _ghost(self):
        h = self.h
        band = (~self.inside_mask) & (self.sd > -GHOST_DEPTH * h)
        gidx = np.flatnonzero(band.ravel())
        pts = self.coords().reshape(-1, 2)[gidx]
        foot = self.domain.project(pts)
        v = foot - pts
        sigma = np.linalg.norm(v, axis=1)
        nu = np.where(sigma[:, None] > 0, v / np.where(sigma > 0, sigma, 1.0)[:, None], 0.0)
        L1 = -sigma * (sigma + 3 * h) / (2 * h * h)
        L2 = sigma * (sigma + 2 * h) / (3 * h * h)
        rows, cols, vals = [], [], []
        inside_flat = self.inside_mask.ravel()
        for depth, L in ((2.0, L1), (3.0, L2)):
            q = foot + depth * h * nu
            idx, w = self._bilinear_stencil(q)
            ok = inside_flat[idx]
            w = np.where(ok, w, 0.0)
            norm = w.sum(axis=1, keepdims=True)
            w = np.where(norm > 0, w / np.where(norm > 0, norm, 1.0), 0.0)
            for k in range(4):
                rows.append(np.arange(len(gidx)))
                cols.append(idx[:, k])
                vals.append(L * w[:, k])
        G = sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(len(gidx), self.nx * self.ny),
        )
        # nearest inside node, used for fields without a Dirichlet condition
        _, (jj, ii) = distance_transform_edt(~self.inside_mask, return_indices=True)
        nearest = (jj * self.nx + ii).ravel()[gidx]
        return gidx, G, nearest

    def extend(self, values: np.ndarray, dirichlet_zero: bool = True) -> np.ndarray:
        """Copy of ``values`` with ghost nodes filled (NaN beyond the ghost band)."""
        full = np.array(values, dtype=float, copy=True)
        gidx, G, nearest = self._ghost
        flat = full.reshape(-1)
        if dirichlet_zero:
            src = np.where(self.inside_mask.ravel(), flat, 0.0)
            flat[gidx] = G @ src
        else:
            flat[gidx] = flat[nearest]
        return full

    # -- interpolation ---------------------------------------------------

    def _bilinear_stencil(self, pts: np.ndarray):
        """Flat corner indices (n, 4) and weights (n, 4) of the enclosing cells."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        fx = (pts[:, 0] - self.origin[0]) / self.h
        fy = (pts[:, 1] - self.origin[1]) / self.h
        i = np.clip(np.floor(fx).astype(int), 0, self.nx - 2)
        j = np.clip(np.floor(fy).astype(int), 0, self.ny - 2)
        tx = fx - i
        ty = fy - j
        base = j * self.nx + i
        idx = np.stack([base, base + 1, base + self.nx, base + self.nx + 1], axis=1)
        w = np.stack([(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty], axis=1)
        return idx, w

    def bilinear(self, full: np.ndarray, pts) -> np.ndarray:
        """Bilinear interpolation of an (extended) node array; NaN if a used corner is NaN."""
        pts = np.asarray(pts, dtype=float)
        idx, w = self._bilinear_stencil(pts)
        flat = full.reshape(self.nx * self.ny, -1)
        vals = flat[idx]  # (n, 4, k)
        wz = w[..., None]
        used = wz != 0
        out = np.sum(np.where(used, vals * wz, 0.0), axis=1)
        bad = np.any(used & np.isnan(vals), axis=1)
        out[bad] = np.nan
        tail = full.shape[2:]
        return out.reshape(pts.shape[:-1] + tail)

    def near_inside(self, pts) -> np.ndarray:
        """True where the enclosing cell has at least one inside corner."""
        idx, _ = self._bilinear_stencil(pts)
        pts = np.asarray(pts, dtype=float)
        fx = (pts[..., 0] - self.origin[0]) / self.h
        fy = (pts[..., 1] - self.origin[1]) / self.h
        in_box = (fx >= 0) & (fx <= self.nx - 1) & (fy >= 0) & (fy <= self.ny - 1)
        ok = self.inside_mask.ravel()[idx].any(axis=1).reshape(pts.shape[:-1])
        return ok & in_box

    # -- cut-cell gradient stencil ---------------------------------------

    @cached_property
    def _gradient_stencil(self):
        """Per inside node and axis: neighbour flat index (-1 = boundary) and arm length."""
        nx = self.nx
        idx = self.inside_index
        j, i = np.divmod(idx, nx)
        out = {}
        for name, (di, dj) in {"xp": (1, 0), "xm": (-1, 0), "yp": (0, 1), "ym": (0, -1)}.items():
            th = self.theta[name].ravel()[idx]
            nb = (j + dj) * nx + (i + di)
            nb = np.where(th < 1.0, -1, nb)
            out[name] = (nb, th * self.h)
        return out

    def __repr__(self):
        return f"Grid(nx={self.nx}, ny={self.ny}, h={self.h!r}, origin={tuple(self.origin)})"


@dataclass(frozen=True)
class ScalarField:
    grid: Grid
    values: np.ndarray
    dirichlet_zero: bool = True

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        v = np.where(self.grid.inside_mask, v, np.nan)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, f, dirichlet_zero: bool = True) -> "ScalarField":
        vals = np.full(grid.shape, np.nan)
        m = grid.inside_mask
        vals[m] = f(grid.coords()[m])
        return cls(grid, vals, dirichlet_zero)

    @property
    def inside(self) -> np.ndarray:
        return self.values[self.grid.inside_mask]

    def extended(self) -> np.ndarray:
        return self.grid.extend(self.values, self.dirichlet_zero)

    def is_mask_consistent(self) -> bool:
        m = self.grid.inside_mask
        return bool(np.all(np.isfinite(self.values[m])) and np.all(np.isnan(self.values[~m])))


@dataclass(frozen=True)
class VectorField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape + (2,):
            raise ValueError("vector field shape mismatch")
        v = np.where(self.grid.inside_mask[..., None], v, np.nan)
        object.__setattr__(self, "values", v)

    def norm(self) -> ScalarField:
        return ScalarField(self.grid, np.linalg.norm(self.values, axis=-1), dirichlet_zero=False)


def build_grid(domain: Domain, resolution: int) -> Grid:
    """Grid with spacing (longest bbox side)/resolution and a margin of 3 nodes."""
    if resolution < 16:
        raise ConfigurationError(f"resolution must be >= 16, got {resolution}")
    xmin, xmax, ymin, ymax = domain.bbox()
    L = max(xmax - xmin, ymax - ymin)
    h = L / resolution
    rho = inradius(domain)
    if rho < 4 * h:
        raise ConfigurationError(f"inradius {rho:.4g} < 4h = {4 * h:.4g}; increase resolution")
    nx = int(math.ceil((xmax - xmin) / h - 1e-9)) + 1 + 2 * MARGIN
    ny = int(math.ceil((ymax - ymin) / h - 1e-9)) + 1 + 2 * MARGIN
    cx, cy = 0.5 * (xmin + xmax), 0.5 * (ymin + ymax)
    origin = (cx - 0.5 * (nx - 1) * h, cy - 0.5 * (ny - 1) * h)
    return Grid(domain, nx, ny, h, origin)


def _sw_derivative(u0, up, hp, um, hm):
    """Derivative at 0 of the quadratic through (-hm, um), (0, u0), (hp, up)."""
    return (hm * hm * (up - u0) - hp * hp * (um - u0)) / (hm * hp * (hm + hp))


def _gradient_inside(grid: Grid, flat: np.ndarray, dirichlet_zero: bool) -> np.ndarray:
    st = grid._gradient_stencil
    u0 = flat[grid.inside_index]
    comps = []
    for plus, minus in (("xp", "xm"), ("yp", "ym")):
        nbp, hp = st[plus]
        nbm, hm = st[minus]
        if dirichlet_zero:
            up = np.where(nbp >= 0, flat[nbp], 0.0)
            um = np.where(nbm >= 0, flat[nbm], 0.0)
            comps.append(_sw_derivative(u0, up, hp, um, hm))
        else:
            h = grid.h
            up = flat[np.maximum(nbp, 0)]
            um = flat[np.maximum(nbm, 0)]
            both = (nbp >= 0) & (nbm >= 0)
            g = np.where(both, (up - um) / (2 * h), 0.0)
            g = np.where((nbp >= 0) & (nbm < 0), (up - u0) / h, g)
            g = np.where((nbp < 0) & (nbm >= 0), (u0 - um) / h, g)
            comps.append(g)
    return np.stack(comps, axis=1)


def gradient(field: ScalarField) -> VectorField:
    """Centered differences inside, cut-cell (Shortley-Weller) next to the boundary."""
    grid = field.grid
    flat = np.nan_to_num(field.values.ravel())
    out = np.full((grid.nx * grid.ny, 2), np.nan)
    out[grid.inside_index] = _gradient_inside(grid, flat, field.dirichlet_zero)
    return VectorField(grid, out.reshape(grid.shape + (2,)))


def interpolate(field: ScalarField | VectorField, point) -> np.ndarray | float:
    """Bilinear interpolation; outside corners come from the ghost extension."""
    grid = field.grid
    pts = np.asarray(point, dtype=float)
    if not np.all(grid.near_inside(pts)):
        raise DomainError("interpolation point farther than one cell from the inside region")
    if isinstance(field, VectorField):
        full = np.stack([grid.extend(field.values[..., k], False) for k in range(2)], axis=-1)
    else:
        full = field.extended()
    out = grid.bilinear(full, pts)
    if isinstance(field, ScalarField) and pts.ndim == 1:
        return float(out)
    return out


def _check_convex_mask(grid: Grid) -> np.ndarray:
    pts = grid.coords()[grid.inside_mask]
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise UnsupportedError(f"degenerate inside mask: {exc}") from None
    allpts = grid.coords().reshape(-1, 2)
    eq = hull.equations
    in_hull = np.all(allpts @ eq[:, :2].T + eq[:, 2] <= 1e-9 * grid.h, axis=1)
    if np.any(in_hull & ~grid.inside_mask.ravel()):
        raise UnsupportedError("convex envelope needs a convex inside mask")
    return pts


def convex_envelope(field: ScalarField) -> ScalarField:
    """Largest convex function below the node values (lower hull of (x, y, w))."""
    grid = field.grid
    pts = _check_convex_mask(grid)
    w = field.values[grid.inside_mask]
    if not np.all(np.isfinite(w)):
        raise UnsupportedError("field must be finite on inside nodes")
    cloud = np.column_stack([pts, w])
    # Center and scale for qhull conditioning; the envelope is affine-covariant.
    shift = cloud.mean(axis=0)
    span = np.ptp(cloud, axis=0)
    span[span == 0] = 1.0
    scaled = (cloud - shift) / span
    try:
        hull = ConvexHull(scaled, qhull_options="Qt")
    except QhullError:
        # w is affine on the nodes (flat cloud): it is its own envelope
        return ScalarField(grid, field.values, field.dirichlet_zero)
    eq = hull.equations
    lower = eq[eq[:, 2] < -1e-12]
    a = -lower[:, 0] / lower[:, 2]
    b = -lower[:, 1] / lower[:, 2]
    c = -lower[:, 3] / lower[:, 2]
    sx, sy = scaled[:, 0], scaled[:, 1]
    env = np.full(len(w), -np.inf)
    for s in range(0, len(w), 2048):
        vals = np.outer(sx[s : s + 2048], a) + np.outer(sy[s : s + 2048], b) + c
        env[s : s + 2048] = vals.max(axis=1)
    env = env * span[2] + shift[2]
    env = np.minimum(env, w)
    out = np.full(grid.shape, np.nan)
    out[grid.inside_mask] = env
    return ScalarField(grid, out, field.dirichlet_zero)


@dataclass(frozen=True)
class DeficitResult:
    worst: float
    x: np.ndarray
    y: np.ndarray
    lam: float
    samples: int


def midpoint_concavity_deficit(field: ScalarField, sample_count: int, rng_seed: int) -> DeficitResult:
    """Largest lam f(x) + (1-lam) f(y) - f(lam x + (1-lam) y) over random chords.

    Chords join two inside nodes x = z - k v, y = z + m v through a third node
    z, with v a random integer lattice direction, so lam = m/(k+m) and f is
    only read at nodes. Half of the samples use k = m (lam = 1/2); the other
    half draw k, m independently. Positive values flag concavity violations.
    """
    if sample_count < 1000:
        raise ConfigurationError("sample_count must be >= 1000")
    grid = field.grid
    rng = np.random.default_rng(rng_seed)
    inside = grid.inside_mask
    vals = field.values
    inside_ij = np.argwhere(inside)  # rows (j, i)
    span = max(grid.nx, grid.ny)
    got_x, got_y, got_z, got_lam = [], [], [], []
    need = sample_count
    half = sample_count // 2
    n_mid = 0
    while need > 0:
        batch = max(4 * need, 1024)
        z = inside_ij[rng.integers(0, len(inside_ij), batch)]
        v = rng.integers(-8, 9, size=(batch, 2))
        v[np.all(v == 0, axis=1)] = (1, 0)
        kmax = max(span // 4, 2)
        k = rng.integers(1, kmax, batch)
        m = rng.integers(1, kmax, batch)
        mid = np.arange(batch) < max(half - n_mid, 0)
        m = np.where(mid, k, m)
        xj, xi = z[:, 0] - k * v[:, 1], z[:, 1] - k * v[:, 0]
        yj, yi = z[:, 0] + m * v[:, 1], z[:, 1] + m * v[:, 0]
        ok = (xj >= 0) & (xj < grid.ny) & (xi >= 0) & (xi < grid.nx)
        ok &= (yj >= 0) & (yj < grid.ny) & (yi >= 0) & (yi < grid.nx)
        ok[ok] &= inside[xj[ok], xi[ok]] & inside[yj[ok], yi[ok]]
        sel = np.flatnonzero(ok)[:need]
        n_mid += int(np.sum(mid[sel]))
        got_x.append(np.stack([xj[sel], xi[sel]], 1))
        got_y.append(np.stack([yj[sel], yi[sel]], 1))
        got_z.append(z[sel])
        got_lam.append(m[sel] / (k[sel] + m[sel]))
        need -= len(sel)
    X, Y, Z = (np.concatenate(a) for a in (got_x, got_y, got_z))
    lam = np.concatenate(got_lam)
    fx, fy, fz = vals[X[:, 0], X[:, 1]], vals[Y[:, 0], Y[:, 1]], vals[Z[:, 0], Z[:, 1]]
    deficit = lam * fx + (1 - lam) * fy - fz
    w = int(np.argmax(deficit))
    to_pt = lambda jj: grid.node_point(jj[1], jj[0])  # noqa: E731
    return DeficitResult(float(deficit[w]), to_pt(X[w]), to_pt(Y[w]), float(lam[w]), len(deficit))


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.17g}"


def write_field(path, field: ScalarField) -> None:
    """Text field file: header, ``nx ny h x0 y0``, then one row per y level."""
    g = field.grid
    lines = ["IGLFIELD 1", " ".join([str(g.nx), str(g.ny)] + [_fmt(v) for v in (g.h, *g.origin)])]
    for row in field.values:
        lines.append(" ".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_field(path, grid: Grid | None = None, dirichlet_zero: bool = True):
    """Read a field file.

    With a grid, returns a ScalarField after checking the header matches the
    grid bit-for-bit; otherwise returns ``(nx, ny, h, origin, values)``.
    """
    text = Path(path).read_text().split("\n")
    if text[0].strip() != "IGLFIELD 1":
        raise ValueError(f"{path}: not an IGLFIELD file")
    head = text[1].split()
    nx, ny = int(head[0]), int(head[1])
    h, x0, y0 = (float(t) for t in head[2:5])
    values = np.array([[float(t) for t in text[2 + j].split()] for j in range(ny)])
    if values.shape != (ny, nx):
        raise ValueError(f"{path}: expected {ny} rows of {nx} values")
    if grid is None:
        return nx, ny, h, np.array([x0, y0]), values
    if (nx, ny, h, x0, y0) != (grid.nx, grid.ny, grid.h, grid.origin[0], grid.origin[1]):
        raise ValueError(f"{path}: header does not match the grid")
    return ScalarField(grid, values, dirichlet_zero)
