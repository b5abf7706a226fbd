"""Analytic convex domains in the plane.

Every shape exposes an exact signed distance (positive inside), the inradius,
its high ridge (where the distance attains the inradius) and its cut locus
(closure of the singular set of the distance), together with the web function

    phi(x) = c0 * (rho**(4/3) - (rho - d(x))**(4/3)),   c0 = 3**(4/3) / 4,

which is the explicit solution of ``-Delta_inf u = 1`` on domains whose cut
locus and high ridge coincide.

All routines are vectorized over a trailing axis of length 2 unless stated
otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.optimize import linprog

from .errors import DomainError, InvalidInputError

C0 = 3.0 ** (4.0 / 3.0) / 4.0

__all__ = [
    "C0",
    "Ball",
    "Stadium",
    "Ellipse",
    "ConvexPolygon",
    "Domain",
    "DistanceProbe",
    "Locus",
    "signed_distance",
    "inradius",
    "distance_probe",
    "high_ridge",
    "cut_locus",
    "cut_locus_mask",
    "cut_equals_high_ridge",
    "web_function",
    "web_gradient",
    "diametral_ball_check",
    "domain_from_dict",
    "domain_to_dict",
    "square",
]


def _as_points(point) -> np.ndarray:
    p = np.asarray(point, dtype=float)
    if p.shape[-1] != 2:
        raise InvalidInputError(f"expected points with trailing dimension 2, got {p.shape}")
    if not np.all(np.isfinite(p)):
        raise InvalidInputError("non-finite point coordinates")
    return p


def _vec(v) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(2)
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("non-finite coordinates in domain description")
    return a


@dataclass(frozen=True)
class Locus:
    """Union of isolated points and straight segments.

    ``mask`` is an optional per-node boolean array of a grid on which the
    locus was rasterized.
    """

    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    segments: np.ndarray = field(default_factory=lambda: np.zeros((0, 2, 2)))
    mask: np.ndarray | None = None

    def sample(self, spacing: float) -> np.ndarray:
        """Points of the locus, segments sampled with at most ``spacing`` gaps."""
        out = [np.asarray(self.points, dtype=float).reshape(-1, 2)]
        for a, b in np.asarray(self.segments, dtype=float).reshape(-1, 2, 2):
            n = max(int(math.ceil(np.linalg.norm(b - a) / spacing)), 1)
            s = np.linspace(0.0, 1.0, n + 1)[:, None]
            out.append(a + s * (b - a))
        return np.concatenate(out, axis=0)

    def distance_to(self, pts) -> np.ndarray:
        """Euclidean distance from each point to the locus."""
        pts = np.asarray(pts, dtype=float)
        flat = pts.reshape(-1, 2)
        best = np.full(flat.shape[0], np.inf)
        for p in np.asarray(self.points, dtype=float).reshape(-1, 2):
            best = np.minimum(best, np.linalg.norm(flat - p, axis=1))
        for a, b in np.asarray(self.segments, dtype=float).reshape(-1, 2, 2):
            best = np.minimum(best, _segment_distance(flat, a, b))
        return best.reshape(pts.shape[:-1])

    @property
    def is_empty(self) -> bool:
        return len(self.points) == 0 and len(self.segments) == 0


def _segment_distance(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    L2 = float(ab @ ab)
    if L2 == 0.0:
        return np.linalg.norm(pts - a, axis=-1)
    t = np.clip(((pts - a) @ ab) / L2, 0.0, 1.0)
    foot = a + t[..., None] * ab
    return np.linalg.norm(pts - foot, axis=-1)


@dataclass(frozen=True)
class DistanceProbe:
    point: np.ndarray
    distance: float
    nearest_boundary_points: list


class _Shape:
    kind = ""

    def signed_distance(self, pts: np.ndarray) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError

    def nearest_points(self, p: np.ndarray, angular_tol: float) -> list:  # pragma: no cover
        raise NotImplementedError

    def project(self, pts: np.ndarray) -> np.ndarray:
        """Nearest boundary point (one of them, on singular sets)."""
        raise NotImplementedError  # pragma: no cover

    def contains(self, pts) -> np.ndarray:
        return self.signed_distance(_as_points(pts)) > 0


@dataclass(frozen=True)
class Ball(_Shape):
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    kind = "ball"

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(_vec(self.center)))
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise InvalidInputError("ball radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))

    def signed_distance(self, pts):
        return self.radius - np.linalg.norm(pts - np.asarray(self.center), axis=-1)

    def project(self, pts):
        c = np.asarray(self.center)
        v = pts - c
        r = np.linalg.norm(v, axis=-1, keepdims=True)
        safe = np.where(r > 0, r, 1.0)
        unit = np.where(r > 0, v / safe, np.array([1.0, 0.0]))
        return c + self.radius * unit

    def nearest_points(self, p, angular_tol):
        c = np.asarray(self.center)
        v = p - c
        r = np.linalg.norm(v)
        if r <= 1e-12 * self.radius:
            # whole circle; even count keeps antipodal pairs
            n = 2 * max(int(math.ceil(math.pi / angular_tol)), 2)
            th = 2 * math.pi * np.arange(n) / n
            return [c + self.radius * np.array([math.cos(t), math.sin(t)]) for t in th]
        return [c + self.radius * v / r]

    def bbox(self):
        cx, cy = self.center
        r = self.radius
        return (cx - r, cx + r, cy - r, cy + r)

    def inradius(self):
        return self.radius

    def area(self):
        return math.pi * self.radius ** 2

    def boundary_samples(self, n):
        th = 2 * math.pi * (np.arange(n) + 0.5) / n
        u = np.stack([np.cos(th), np.sin(th)], axis=1)
        return np.asarray(self.center) + self.radius * u, -u

    def high_ridge_locus(self):
        return Locus(points=np.array([self.center]))

    def cut_locus_locus(self):
        return Locus(points=np.array([self.center]))

    def to_dict(self):
        return {"shape": "ball", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Stadium(_Shape):
    """Set of points closer than ``radius`` to the segment [p0, p1]."""

    p0: tuple = (-1.0, 0.0)
    p1: tuple = (1.0, 0.0)
    radius: float = 1.0
    kind = "stadium"

    def __post_init__(self):
        object.__setattr__(self, "p0", tuple(_vec(self.p0)))
        object.__setattr__(self, "p1", tuple(_vec(self.p1)))
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise InvalidInputError("stadium radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))
        if self.length == 0.0:
            raise InvalidInputError("zero-length stadium; use Ball (make_stadium normalizes)")

    @property
    def length(self):
        return float(np.linalg.norm(np.subtract(self.p1, self.p0)))

    @property
    def _frame(self):
        a = np.asarray(self.p0)
        e = (np.asarray(self.p1) - a) / self.length
        return a, e, np.array([-e[1], e[0]])

    def _foot(self, pts):
        a, e, _ = self._frame
        t = np.clip((pts - a) @ e, 0.0, self.length)
        return a + t[..., None] * e, t

    def signed_distance(self, pts):
        foot, _ = self._foot(pts)
        return self.radius - np.linalg.norm(pts - foot, axis=-1)

    def project(self, pts):
        foot, _ = self._foot(pts)
        v = pts - foot
        r = np.linalg.norm(v, axis=-1, keepdims=True)
        _, _, n = self._frame
        unit = np.where(r > 0, v / np.where(r > 0, r, 1.0), n)
        return foot + self.radius * unit

    def nearest_points(self, p, angular_tol):
        a, e, n = self._frame
        foot, t = self._foot(p)
        v = p - foot
        r = np.linalg.norm(v)
        if r > 1e-12 * self.radius:
            return [foot + self.radius * v / r]
        if 0.0 < t < self.length:
            return [foot + self.radius * n, foot - self.radius * n]
        # at an endpoint: a closed half circle of minimizers
        outward = -e if t == 0.0 else e
        m = max(int(math.ceil(math.pi / angular_tol)), 2)
        base = math.atan2(outward[1], outward[0])
        th = base + np.linspace(-math.pi / 2, math.pi / 2, m + 1)
        return [foot + self.radius * np.array([math.cos(s), math.sin(s)]) for s in th]

    def bbox(self):
        xs = [self.p0[0], self.p1[0]]
        ys = [self.p0[1], self.p1[1]]
        r = self.radius
        return (min(xs) - r, max(xs) + r, min(ys) - r, max(ys) + r)

    def inradius(self):
        return self.radius

    def area(self):
        return math.pi * self.radius ** 2 + 2 * self.length * self.radius

    def boundary_samples(self, n):
        a, e, nrm = self._frame
        L, r = self.length, self.radius
        per = 2 * L + 2 * math.pi * r
        s = per * (np.arange(n) + 0.5) / n
        pts = np.empty((n, 2))
        inward = np.empty((n, 2))
        b = np.asarray(self.p1)
        phi0 = math.atan2(nrm[1], nrm[0])
        for k, sk in enumerate(s):
            if sk < L:  # side along +n, from p0 to p1
                pts[k] = a + sk * e + r * nrm
                inward[k] = -nrm
            elif sk < L + math.pi * r:  # cap around p1, from +n to -n through +e
                ang = phi0 - (sk - L) / r
                u = np.array([math.cos(ang), math.sin(ang)])
                pts[k] = b + r * u
                inward[k] = -u
            elif sk < 2 * L + math.pi * r:
                pts[k] = b - (sk - L - math.pi * r) * e - r * nrm
                inward[k] = nrm
            else:
                ang = phi0 + math.pi - (sk - 2 * L - math.pi * r) / r
                u = np.array([math.cos(ang), math.sin(ang)])
                pts[k] = a + r * u
                inward[k] = -u
        return pts, inward

    def high_ridge_locus(self):
        return Locus(segments=np.array([[self.p0, self.p1]]))

    def cut_locus_locus(self):
        return Locus(segments=np.array([[self.p0, self.p1]]))

    def to_dict(self):
        return {"shape": "stadium", "p0": list(self.p0), "p1": list(self.p1), "radius": self.radius}


def make_stadium(p0, p1, radius) -> _Shape:
    """Stadium constructor that turns a zero-length core into a Ball."""
    p0, p1 = _vec(p0), _vec(p1)
    if np.array_equal(p0, p1):
        return Ball(tuple(p0), radius)
    return Stadium(tuple(p0), tuple(p1), radius)


def _ellipse_theta(a: float, b: float, X: np.ndarray, Y: np.ndarray):
    """Boundary parameter of the nearest point for X, Y >= 0 (first quadrant).

    Solves f(t) = (a^2-b^2) sin t cos t - X a sin t + Y b cos t = 0 on [0, pi/2]
    with bracket-safeguarded Newton; f(0) >= 0 >= f(pi/2).
    """
    k = a * a - b * b
    theta = np.empty_like(X)
    on_axis_y = Y == 0.0
    # y = 0: interior root exists only inside the evolute segment |x| < k/a
    inner = on_axis_y & (X * a < k)
    theta[on_axis_y] = 0.0
    if np.any(inner):
        theta[inner] = np.arccos(np.clip(X[inner] * a / k, -1.0, 1.0))
    gen = ~on_axis_y
    x0 = X == 0.0
    theta[gen & x0] = 0.5 * math.pi
    gen &= ~x0
    if not np.any(gen):
        return theta
    Xg, Yg = X[gen], Y[gen]
    lo = np.zeros_like(Xg)
    hi = np.full_like(Xg, 0.5 * math.pi)
    t = np.arctan2(a * Yg, b * Xg)
    done = np.zeros(Xg.shape, dtype=bool)
    # Stop on the step size, not on |f|: for tiny Y, f is also tiny near the
    # vertex t = 0, which is stationary but not nearest. A Newton step towards
    # that spurious root leaves the bracket and falls back to bisection.
    for _ in range(60):
        s, c = np.sin(t), np.cos(t)
        f = k * s * c - Xg * a * s + Yg * b * c
        pos = f > 0
        lo = np.where(pos, t, lo)
        hi = np.where(pos, hi, t)
        df = k * (c * c - s * s) - Xg * a * c - Yg * b * s
        with np.errstate(divide="ignore", invalid="ignore"):
            tn = t - f / df
        bad = ~np.isfinite(tn) | (tn < lo) | (tn > hi)
        tn = np.where(bad, 0.5 * (lo + hi), tn)
        step = np.abs(tn - t)
        t = np.where(done, t, tn)
        done |= (step <= 1e-15) | (f == 0.0) | (hi - lo <= 1e-15)
        if done.all():
            break
    theta[gen] = t
    return theta


@dataclass(frozen=True)
class Ellipse(_Shape):
    """Axis-aligned ellipse with semi-axes a >= b (a along x)."""

    center: tuple = (0.0, 0.0)
    a: float = 1.5
    b: float = 1.0
    kind = "ellipse"

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(_vec(self.center)))
        a, b = float(self.a), float(self.b)
        if not (np.isfinite(a) and np.isfinite(b) and a > 0 and b > 0):
            raise InvalidInputError("ellipse semi-axes must be positive")
        if a < b:
            raise InvalidInputError("ellipse must be stored with a >= b")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def _project_local(self, pts):
        q = pts - np.asarray(self.center)
        X, Y = np.abs(q[..., 0]), np.abs(q[..., 1])
        shape = X.shape
        th = _ellipse_theta(self.a, self.b, X.ravel(), Y.ravel()).reshape(shape)
        sx = np.where(q[..., 0] < 0, -1.0, 1.0)
        sy = np.where(q[..., 1] < 0, -1.0, 1.0)
        foot = np.stack([sx * self.a * np.cos(th), sy * self.b * np.sin(th)], axis=-1)
        return q, foot

    def signed_distance(self, pts):
        q, foot = self._project_local(pts)
        dist = np.linalg.norm(q - foot, axis=-1)
        inside = (q[..., 0] / self.a) ** 2 + (q[..., 1] / self.b) ** 2 <= 1.0
        return np.where(inside, dist, -dist)

    def project(self, pts):
        _, foot = self._project_local(pts)
        return foot + np.asarray(self.center)

    @property
    def cut_half_length(self):
        return (self.a ** 2 - self.b ** 2) / self.a

    def nearest_points(self, p, angular_tol):
        q, foot = self._project_local(p)
        c = np.asarray(self.center)
        if abs(q[1]) == 0.0 and abs(q[0]) < self.cut_half_length:
            mirrored = foot * np.array([1.0, -1.0])
            return [foot + c, mirrored + c]
        if self.a == self.b and np.allclose(q, 0.0):
            return Ball(self.center, self.a).nearest_points(p, angular_tol)
        return [foot + c]

    def bbox(self):
        cx, cy = self.center
        return (cx - self.a, cx + self.a, cy - self.b, cy + self.b)

    def inradius(self):
        return self.b

    def area(self):
        return math.pi * self.a * self.b

    def boundary_samples(self, n):
        m = 20000
        t = np.linspace(0.0, 2 * math.pi, m + 1)
        xy = np.stack([self.a * np.cos(t), self.b * np.sin(t)], axis=1)
        seg = np.linalg.norm(np.diff(xy, axis=0), axis=1)
        arc = np.concatenate([[0.0], np.cumsum(seg)])
        s = arc[-1] * (np.arange(n) + 0.5) / n
        ts = np.interp(s, arc, t)
        pts = np.stack([self.a * np.cos(ts), self.b * np.sin(ts)], axis=1)
        nrm = -np.stack([self.b * np.cos(ts), self.a * np.sin(ts)], axis=1)
        nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
        return pts + np.asarray(self.center), nrm

    def high_ridge_locus(self):
        if self.a == self.b:
            return Locus(points=np.array([self.center]))
        return Locus(points=np.array([self.center]))

    def cut_locus_locus(self):
        c = np.asarray(self.center)
        k = self.cut_half_length
        if k == 0.0:
            return Locus(points=np.array([self.center]))
        return Locus(segments=np.array([[c - [k, 0.0], c + [k, 0.0]]]))

    def to_dict(self):
        return {"shape": "ellipse", "center": list(self.center), "a": self.a, "b": self.b}


@dataclass(frozen=True)
class ConvexPolygon(_Shape):
    """Strictly convex polygon; vertices counterclockwise."""

    vertices: tuple = ()
    kind = "polygon"

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise InvalidInputError("polygon needs at least 3 vertices [[x, y], ...]")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("non-finite polygon vertex")
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        scale = np.max(np.linalg.norm(e, axis=1)) ** 2
        if np.any(cross <= 1e-12 * scale):
            raise InvalidInputError("polygon must be strictly convex and counterclockwise")
        object.__setattr__(self, "vertices", tuple(map(tuple, v)))

    @property
    def _v(self):
        return np.asarray(self.vertices, dtype=float)

    @property
    def _lines(self):
        """Inward unit normals n_i and offsets c_i, with n_i . x >= c_i inside."""
        v = self._v
        e = np.roll(v, -1, axis=0) - v
        n = np.stack([-e[:, 1], e[:, 0]], axis=1)
        n /= np.linalg.norm(n, axis=1, keepdims=True)
        return n, np.einsum("ij,ij->i", n, v)

    def _edge_values(self, pts):
        n, c = self._lines
        return pts @ n.T - c

    def _segment_dist(self, pts):
        v = self._v
        w = np.roll(v, -1, axis=0)
        return np.stack([_segment_distance(pts, v[i], w[i]) for i in range(len(v))], axis=-1)

    def signed_distance(self, pts):
        inner = np.min(self._edge_values(pts), axis=-1)
        out = inner < 0
        if np.any(out):
            outside = -np.min(self._segment_dist(pts[out]), axis=-1)
            inner = np.array(inner, dtype=float, copy=True)
            inner[out] = outside
        return inner

    def project(self, pts):
        v = self._v
        w = np.roll(v, -1, axis=0)
        flat = pts.reshape(-1, 2)
        best = np.full(len(flat), np.inf)
        foot = np.zeros_like(flat)
        for i in range(len(v)):
            ab = w[i] - v[i]
            t = np.clip(((flat - v[i]) @ ab) / (ab @ ab), 0.0, 1.0)
            f = v[i] + t[:, None] * ab
            dist = np.linalg.norm(flat - f, axis=1)
            better = dist < best
            best = np.where(better, dist, best)
            foot[better] = f[better]
        return foot.reshape(pts.shape)

    def nearest_points(self, p, angular_tol):
        vals = self._edge_values(p[None, :])[0]
        d = float(np.min(vals))
        if d < 0:
            return [self.project(p[None, :])[0]]
        n, _ = self._lines
        tol = 1e-10 * self.diameter
        return [p - vals[i] * n[i] for i in np.flatnonzero(vals <= d + tol)]

    @property
    def diameter(self):
        v = self._v
        return float(np.max(np.linalg.norm(v[:, None] - v[None], axis=-1)))

    def bbox(self):
        v = self._v
        return (v[:, 0].min(), v[:, 0].max(), v[:, 1].min(), v[:, 1].max())

    def _incircle_lp(self):
        n, c = self._lines
        A = np.hstack([-n, np.ones((len(n), 1))])
        res = linprog([0.0, 0.0, -1.0], A_ub=A, b_ub=-c, bounds=[(None, None)] * 3, method="highs")
        if not res.success:  # pragma: no cover - strictly convex input always feasible
            raise DomainError(f"inscribed-circle LP failed: {res.message}")
        return res.x[:2], float(res.x[2])

    def inradius(self):
        return self._incircle_lp()[1]

    def area(self):
        v = self._v
        w = np.roll(v, -1, axis=0)
        return 0.5 * float(np.sum(v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]))

    def boundary_samples(self, n):
        v = self._v
        w = np.roll(v, -1, axis=0)
        lens = np.linalg.norm(w - v, axis=1)
        arc = np.concatenate([[0.0], np.cumsum(lens)])
        s = arc[-1] * (np.arange(n) + 0.5) / n
        idx = np.clip(np.searchsorted(arc, s, side="right") - 1, 0, len(v) - 1)
        t = ((s - arc[idx]) / lens[idx])[:, None]
        pts = v[idx] + t * (w[idx] - v[idx])
        nrm, _ = self._lines
        return pts, nrm[idx]

    def high_ridge_locus(self):
        x0, rho = self._incircle_lp()
        n, c = self._lines
        A = -n
        b = -(c + rho) + 1e-11 * max(self.diameter, 1.0)
        v = self._v
        dirs = np.roll(v, -1, axis=0) - v
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        best = (0.0, x0, x0)
        for d in dirs:
            hi = linprog(-d, A_ub=A, b_ub=b, bounds=[(None, None)] * 2, method="highs")
            lo = linprog(d, A_ub=A, b_ub=b, bounds=[(None, None)] * 2, method="highs")
            if hi.success and lo.success:
                span = float(d @ (hi.x - lo.x))
                if span > best[0]:
                    best = (span, lo.x, hi.x)
        if best[0] <= 1e-8 * max(self.diameter, 1.0):
            return Locus(points=np.array([x0]))
        return Locus(segments=np.array([[best[1], best[2]]]))

    def cut_locus_locus(self):
        return Locus(segments=straight_skeleton(self._v))

    def to_dict(self):
        return {"shape": "polygon", "vertices": [list(p) for p in self.vertices]}


def straight_skeleton(vertices) -> np.ndarray:
    """Straight skeleton (= medial axis) of a strictly convex CCW polygon.

    Wavefront simulation: every edge line moves inward at unit speed, and an
    edge collapses when its two neighbouring offset lines meet it at a single
    point. Returns an array of segments (m, 2, 2).
    """
    v = np.asarray(vertices, dtype=float)
    e = np.roll(v, -1, axis=0) - v
    n = np.stack([-e[:, 1], e[:, 0]], axis=1)
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    c = np.einsum("ij,ij->i", n, v)
    scale = float(np.max(np.abs(v))) + 1.0

    active = list(range(len(v)))
    # node start position keyed by (left edge, right edge); polygon vertex i
    # sits between edge i-1 and edge i
    start = {(active[i - 1], active[i]): v[active[i]].copy() for i in range(len(active))}
    segments = []

    def concurrency(i, j, k):
        M = np.array([[n[i, 0], n[i, 1], -1.0], [n[j, 0], n[j, 1], -1.0], [n[k, 0], n[k, 1], -1.0]])
        rhs = np.array([c[i], c[j], c[k]])
        if abs(np.linalg.det(M)) < 1e-14:
            return None
        sol = np.linalg.solve(M, rhs)
        return sol[:2], sol[2]

    def emit(a, b):
        if np.linalg.norm(b - a) > 1e-12 * scale:
            segments.append([a, b])

    while len(active) >= 3:
        m = len(active)
        best = None
        for pos in range(m):
            i, j, k = active[pos - 1], active[pos], active[(pos + 1) % m]
            ev = concurrency(i, j, k)
            if ev is None:
                continue
            if best is None or ev[1] < best[1] - 1e-13 * scale:
                best = (ev[0], ev[1], pos)
        if best is None:  # pragma: no cover - parallel triple cannot close
            break
        point, _, pos = best
        i, j, k = active[pos - 1], active[pos], active[(pos + 1) % m]
        if m == 3:
            for key in ((i, j), (j, k), (k, i)):
                emit(start[key], point)
            break
        emit(start.pop((i, j)), point)
        emit(start.pop((j, k)), point)
        start[(i, k)] = point.copy()
        active.pop(pos)
    return np.array(segments, dtype=float).reshape(-1, 2, 2)


Domain = Ball | Stadium | Ellipse | ConvexPolygon


def square(half_side: float = 1.0, center=(0.0, 0.0)) -> ConvexPolygon:
    cx, cy = center
    s = half_side
    return ConvexPolygon(((cx - s, cy - s), (cx + s, cy - s), (cx + s, cy + s), (cx - s, cy + s)))


def signed_distance(domain: Domain, point) -> np.ndarray | float:
    """Distance to the boundary inside, minus the distance outside."""
    p = _as_points(point)
    out = domain.signed_distance(p)
    return float(out) if p.ndim == 1 else out


def inradius(domain: Domain) -> float:
    return float(domain.inradius())


def distance_probe(domain: Domain, point, angular_tol: float = 0.2) -> DistanceProbe:
    p = _as_points(point).reshape(2)
    d = float(domain.signed_distance(p[None, :])[0])
    pts = domain.nearest_points(p, angular_tol)
    return DistanceProbe(point=p, distance=abs(d), nearest_boundary_points=[np.asarray(q) for q in pts])


def high_ridge(domain: Domain, tolerance: float, grid=None) -> Locus:
    """Exact high ridge, plus the mask {d >= rho - tolerance} when a grid is given."""
    if tolerance <= 0:
        raise InvalidInputError("tolerance must be positive")
    locus = domain.high_ridge_locus()
    if grid is None:
        return locus
    d = domain.signed_distance(grid.coords())
    mask = d >= inradius(domain) - tolerance
    return Locus(locus.points, locus.segments, mask)


def cut_locus(domain: Domain, angular_tol: float = 0.2, grid=None) -> Locus:
    """Exact cut locus, plus a rasterized singular-node mask when a grid is given."""
    if angular_tol <= 0:
        raise InvalidInputError("angular_tol must be positive")
    locus = domain.cut_locus_locus()
    if grid is None:
        return locus
    return Locus(locus.points, locus.segments, cut_locus_mask(domain, grid, angular_tol))


def cut_locus_mask(domain: Domain, grid, angular_tol: float = 0.2, samples: int = 4096) -> np.ndarray:
    """Inside nodes with two nearest boundary points seen at an angle > angular_tol.

    Nearest points are local minima of |x - q| over a dense boundary sampling,
    kept when within one grid spacing of the global minimum.
    """
    bpts, _ = domain.boundary_samples(samples)
    coords = grid.coords()
    inside = grid.inside_mask
    idx = np.flatnonzero(inside.ravel())
    flat = coords.reshape(-1, 2)[idx]
    result = np.zeros(len(idx), dtype=bool)
    slack = grid.h
    for s in range(0, len(idx), 512):
        x = flat[s : s + 512]
        diff = bpts[None, :, :] - x[:, None, :]
        dist = np.linalg.norm(diff, axis=-1)
        prev = np.roll(dist, 1, axis=1)
        nxt = np.roll(dist, -1, axis=1)
        locmin = (dist <= prev) & (dist <= nxt) & (dist <= dist.min(axis=1, keepdims=True) + slack)
        ang = np.arctan2(diff[..., 1], diff[..., 0])
        for r in range(len(x)):
            a = ang[r, locmin[r]]
            if len(a) < 2:
                continue
            da = np.abs(a[:, None] - a[None, :])
            da = np.minimum(da, 2 * math.pi - da)
            result[s + r] = da.max() > angular_tol
    mask = np.zeros(inside.size, dtype=bool)
    mask[idx] = result
    return mask.reshape(inside.shape)


def _hausdorff(A: np.ndarray, B: np.ndarray) -> float:
    from scipy.spatial import cKDTree

    da, _ = cKDTree(B).query(A)
    db, _ = cKDTree(A).query(B)
    return float(max(da.max(), db.max()))


def cut_equals_high_ridge(domain: Domain, hausdorff_tol: float):
    """(verdict, Hausdorff distance) between the cut locus and the high ridge."""
    if hausdorff_tol <= 0:
        raise InvalidInputError("hausdorff_tol must be positive")
    spacing = min(hausdorff_tol, inradius(domain)) / 20.0
    cut = domain.cut_locus_locus().sample(spacing)
    high = domain.high_ridge_locus().sample(spacing)
    dist = _hausdorff(cut, high)
    return dist <= hausdorff_tol, dist


def web_function(domain: Domain, point) -> np.ndarray | float:
    """phi = c0 (rho^{4/3} - (rho - d)^{4/3}); raises DomainError outside the closure."""
    p = _as_points(point)
    d = domain.signed_distance(p)
    rho = inradius(domain)
    if np.any(d < -1e-12 * rho):
        raise DomainError("web_function evaluated outside the closed domain")
    d = np.clip(d, 0.0, rho)
    out = C0 * (rho ** (4.0 / 3.0) - (rho - d) ** (4.0 / 3.0))
    return float(out) if p.ndim == 1 else out


def web_gradient(domain: Domain, point) -> np.ndarray:
    """Gradient of the web function away from the cut locus: g'(d) * (inward normal)."""
    p = _as_points(point)
    flat = p.reshape(-1, 2)
    d = domain.signed_distance(flat)
    rho = inradius(domain)
    foot = domain.project(flat)
    v = flat - foot
    r = np.linalg.norm(v, axis=1, keepdims=True)
    unit = np.where(r > 0, v / np.where(r > 0, r, 1.0), 0.0)
    mag = (3.0 * np.clip(rho - d, 0.0, None)) ** (1.0 / 3.0)
    return (mag[:, None] * unit).reshape(p.shape)


def diametral_ball_check(domain: Domain, tol: float, samples: int = 64):
    """Look for an inscribed ball of radius rho touching the boundary at two diametral points.

    Returns (found, (center, y_plus, y_minus)) with witnesses None when not found.
    """
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    rho = inradius(domain)
    centers = domain.high_ridge_locus().sample(max(rho / samples, 1e-9))
    for center in centers:
        pts = [q for q in domain.nearest_points(center, 0.05)
               if abs(np.linalg.norm(q - center) - rho) <= max(tol, 1e-9 * rho)]
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                mid = 0.5 * (pts[i] + pts[j])
                if np.linalg.norm(mid - center) <= tol:
                    return True, (np.asarray(center), pts[i], pts[j])
    return False, None


def domain_from_dict(spec: dict[str, Any]) -> Domain:
    """Build a domain from its JSON description."""
    try:
        shape = spec["shape"]
        if shape == "ball":
            return Ball(tuple(spec.get("center", (0.0, 0.0))), float(spec["radius"]))
        if shape == "stadium":
            return make_stadium(spec["p0"], spec["p1"], float(spec["radius"]))
        if shape == "ellipse":
            return Ellipse(tuple(spec.get("center", (0.0, 0.0))), float(spec["a"]), float(spec["b"]))
        if shape == "polygon":
            return ConvexPolygon(tuple(map(tuple, spec["vertices"])))
    except KeyError as exc:
        raise InvalidInputError(f"missing domain field {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"malformed domain description: {exc}") from None
    raise InvalidInputError(f"unknown shape {spec.get('shape')!r}")


def domain_to_dict(domain: Domain) -> dict[str, Any]:
    return domain.to_dict()
