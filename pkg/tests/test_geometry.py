import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inflap.errors import DomainError, InvalidInputError
from inflap.geometry import (
    C0,
    Ball,
    ConvexPolygon,
    Ellipse,
    Stadium,
    cut_equals_high_ridge,
    cut_locus,
    cut_locus_mask,
    diametral_ball_check,
    distance_probe,
    domain_from_dict,
    domain_to_dict,
    high_ridge,
    inradius,
    make_stadium,
    signed_distance,
    square,
    straight_skeleton,
    web_function,
    web_gradient,
)
from inflap.grid import build_grid

RNG = np.random.default_rng(0)


def _ellipse_oracle(a, b, pts, n=1_000_000):
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    bd = np.stack([a * np.cos(th), b * np.sin(th)], 1)
    out = []
    for p in pts:
        out.append(np.min(np.linalg.norm(bd - p, axis=1)))
    return np.array(out)


def _polygon_oracle(v, pts):
    v = np.asarray(v, float)
    w = np.roll(v, -1, 0)
    d = np.full(len(pts), np.inf)
    for a, b in zip(v, w):
        ab = b - a
        t = np.clip(((pts - a) @ ab) / (ab @ ab), 0, 1)
        d = np.minimum(d, np.linalg.norm(pts - (a + t[:, None] * ab), axis=1))
    return d


def test_constant_c0():
    assert C0 == pytest.approx(3 ** (4 / 3) / 4, rel=1e-15)
    assert C0 == pytest.approx(1.0817, abs=1e-4)


def test_ball_signed_distance_and_radius():
    b = Ball((0.5, -0.25), 2.0)
    pts = RNG.uniform(-3, 3, size=(200, 2))
    np.testing.assert_allclose(signed_distance(b, pts), 2.0 - np.linalg.norm(pts - (0.5, -0.25), axis=1), atol=1e-14)
    assert inradius(b) == 2.0
    assert signed_distance(b, [0.5, -0.25]) == 2.0


def test_stadium_signed_distance_matches_segment_distance():
    s = Stadium((-1, 0), (1, 0), 1.0)
    pts = RNG.uniform(-3, 3, size=(500, 2))
    foot = np.stack([np.clip(pts[:, 0], -1, 1), np.zeros(len(pts))], 1)
    np.testing.assert_allclose(s.signed_distance(pts), 1.0 - np.linalg.norm(pts - foot, axis=1), atol=1e-14)


def test_ellipse_distance_matches_dense_sampling():
    e = Ellipse((0, 0), 1.5, 1.0)
    pts = np.vstack([RNG.uniform(-1.4, 1.4, size=(30, 2)), [[0, 0], [1.2, 0], [0, 0.5], [2.0, 1.5]]])
    exact = _ellipse_oracle(1.5, 1.0, pts)
    sd = e.signed_distance(pts)
    np.testing.assert_allclose(np.abs(sd), exact, atol=3e-6)
    inside = (pts[:, 0] / 1.5) ** 2 + pts[:, 1] ** 2 < 1
    assert np.all((sd > 0) == inside)


def test_polygon_distance_inradius_and_skeleton():
    tri = ConvexPolygon(((0, 0), (4, 0), (0, 3)))
    pts = np.array([[1.0, 1.0], [0.5, 0.5], [2.0, 0.2]])
    np.testing.assert_allclose(tri.signed_distance(pts), _polygon_oracle(tri.vertices, pts), atol=1e-14)
    # incircle radius of the 3-4-5 triangle: area / semiperimeter = 6 / 6
    assert inradius(tri) == pytest.approx(1.0, abs=1e-9)
    hr = tri.high_ridge_locus()
    np.testing.assert_allclose(hr.points[0], [1.0, 1.0], atol=1e-7)
    sq = square()
    segs = straight_skeleton(np.asarray(sq.vertices))
    # the square skeleton is the two diagonals, i.e. four half-diagonals
    assert len(segs) == 4
    for a, b in segs:
        assert np.linalg.norm(b) == pytest.approx(0, abs=1e-12) or np.linalg.norm(a) == pytest.approx(0, abs=1e-12)


def test_rectangle_skeleton_and_ridge():
    rect = ConvexPolygon(((-2, -1), (2, -1), (2, 1), (-2, 1)))
    ridge = rect.high_ridge_locus()
    a, b = sorted(ridge.segments[0].tolist())
    np.testing.assert_allclose(a, [-1, 0], atol=1e-7)
    np.testing.assert_allclose(b, [1, 0], atol=1e-7)
    ok, dist = cut_equals_high_ridge(rect, 0.05)
    assert not ok and dist == pytest.approx(math.sqrt(2), abs=1e-6)


def test_polygon_rejects_nonconvex_and_clockwise():
    with pytest.raises(InvalidInputError):
        ConvexPolygon(((0, 0), (0, 1), (1, 0)))
    with pytest.raises(InvalidInputError):
        ConvexPolygon(((0, 0), (2, 0), (1, 0.1), (2, 2), (0, 2)))
    with pytest.raises(InvalidInputError):
        ConvexPolygon(((0, 0), (1, 0)))


def test_invalid_inputs():
    with pytest.raises(InvalidInputError):
        signed_distance(Ball(), [np.nan, 0.0])
    with pytest.raises(InvalidInputError):
        Ball((0, 0), -1.0)
    with pytest.raises(InvalidInputError):
        Ellipse((0, 0), 1.0, 0.0)
    with pytest.raises(InvalidInputError):
        high_ridge(Ball(), 0.0)
    with pytest.raises(InvalidInputError):
        cut_equals_high_ridge(Ball(), -1.0)
    with pytest.raises(InvalidInputError):
        diametral_ball_check(Ball(), 0.0)


def test_degenerate_stadium_is_ball():
    assert isinstance(make_stadium((1, 1), (1, 1), 0.5), Ball)
    with pytest.raises(InvalidInputError):
        Stadium((0, 0), (0, 0), 1.0)


def test_web_function_values():
    for dom in (Ball(), Stadium(), Ellipse(), square(), Ball((1, 2), 0.5)):
        rho = inradius(dom)
        ridge = dom.high_ridge_locus().sample(rho / 10)
        np.testing.assert_allclose(web_function(dom, ridge), C0 * rho ** (4 / 3), rtol=1e-12)
        bd, _ = dom.boundary_samples(64)
        np.testing.assert_allclose(web_function(dom, bd), 0.0, atol=1e-10)
    with pytest.raises(DomainError):
        web_function(Ball(), [2.0, 0.0])


def test_web_gradient_on_ball_is_radial():
    pts = np.array([[0.5, 0.0], [0.0, -0.3], [0.6, 0.6]])
    g = web_gradient(Ball(), pts)
    r = np.linalg.norm(pts, axis=1)
    expected = -(3 * r)[:, None] ** (1 / 3) * pts / r[:, None]
    np.testing.assert_allclose(g, expected, rtol=1e-12)


def test_web_gradient_matches_finite_differences():
    dom = Ellipse()
    p = np.array([0.7, 0.55])
    eps = 1e-6
    fd = np.array([(web_function(dom, p + eps * e) - web_function(dom, p - eps * e)) / (2 * eps)
                   for e in np.eye(2)])
    np.testing.assert_allclose(web_gradient(dom, p), fd, rtol=1e-5)


def test_cut_equals_high_ridge():
    h = 4 / 128
    assert cut_equals_high_ridge(Ball(), 2 * h)[0]
    assert cut_equals_high_ridge(Stadium(), 2 * h)[0]
    for a in (1.2, 1.5, 3.0):
        ok, dist = cut_equals_high_ridge(Ellipse((0, 0), a, 1.0), 2 * h)
        assert not ok
        assert dist == pytest.approx((a * a - 1) / a, abs=2 * h)
    assert not cut_equals_high_ridge(square(), 2 * h)[0]


def test_diametral_ball_witnesses():
    ok, (c, yp, ym) = diametral_ball_check(Stadium(), 1e-3)
    assert ok
    assert sorted([yp[1], ym[1]]) == pytest.approx([-1.0, 1.0])
    assert yp[0] == pytest.approx(ym[0])
    ok, (c, yp, ym) = diametral_ball_check(Ellipse(), 1e-3)
    assert ok
    np.testing.assert_allclose(sorted([yp.tolist(), ym.tolist()]), [[0, -1], [0, 1]], atol=1e-9)
    assert diametral_ball_check(Ball(), 1e-3)[0]
    assert diametral_ball_check(square(), 1e-3)[0]
    assert not diametral_ball_check(ConvexPolygon(((0, 0), (4, 0), (0, 3))), 1e-3)[0]


def test_distance_probe_multiplicity():
    probe = distance_probe(Stadium(), [0.3, 0.0])
    assert probe.distance == pytest.approx(1.0)
    assert len(probe.nearest_boundary_points) == 2
    assert len(distance_probe(Stadium(), [0.3, 0.2]).nearest_boundary_points) == 1


def test_cut_locus_mask_on_grid():
    dom = Stadium()
    g = build_grid(dom, 64)
    mask = cut_locus_mask(dom, g)
    pts = g.coords()[mask]
    assert len(pts) > 0
    # flagged nodes lie within a cell of the core segment
    assert np.max(cut_locus(dom).distance_to(pts)) <= g.h
    hr = high_ridge(dom, g.h, g)
    assert hr.mask is not None and hr.mask.any()


def test_eikonal_away_from_cut_locus():
    dom = Ellipse()
    g = build_grid(dom, 128)
    h = g.h
    d = np.where(g.inside_mask, g.sd, np.nan)
    gy, gx = np.gradient(d, h)
    far = g.inside_mask & (g.sd > 2 * h) & (cut_locus(dom).distance_to(g.coords()) > 2 * h)
    far[[0, -1], :] = False
    far[:, [0, -1]] = False
    norm = np.hypot(gx, gy)[far]
    assert np.nanmax(np.abs(norm - 1)) <= 10 * h


def test_domain_dict_round_trip():
    for dom in (Ball((1, 2), 3), Stadium((0, 0), (1, 1), 0.5), Ellipse((0, 1), 2, 1), square()):
        assert domain_from_dict(domain_to_dict(dom)) == dom
    assert isinstance(domain_from_dict({"shape": "stadium", "p0": [0, 0], "p1": [0, 0], "radius": 1}), Ball)
    with pytest.raises(InvalidInputError):
        domain_from_dict({"shape": "torus"})
    with pytest.raises(InvalidInputError):
        domain_from_dict({"shape": "ball"})


domains = st.sampled_from([Ball(), Stadium(), Ellipse(), square(), ConvexPolygon(((0, 0), (4, 0), (0, 3)))])
coords = st.floats(-3, 3, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(domains, coords, coords, coords, coords)
def test_signed_distance_is_1_lipschitz(dom, x1, y1, x2, y2):
    p, q = np.array([x1, y1]), np.array([x2, y2])
    d = dom.signed_distance(np.stack([p, q]))
    assert abs(d[0] - d[1]) <= np.linalg.norm(p - q) + 1e-9


@settings(max_examples=200, deadline=None)
@given(domains, coords, coords)
def test_web_function_range(dom, x, y):
    p = np.array([x, y])
    if dom.signed_distance(p[None])[0] < 0:
        return
    v = web_function(dom, p)
    assert 0 <= v <= C0 * inradius(dom) ** (4 / 3) * (1 + 1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(1.0, 4.0), st.floats(0, 2 * math.pi), st.floats(0.05, 0.95))
def test_ellipse_projection_is_on_boundary_and_normal(a, theta, s):
    e = Ellipse((0, 0), a, 1.0)
    p = s * np.array([a * math.cos(theta), math.sin(theta)])
    q = e.project(p[None])[0]
    assert (q[0] / a) ** 2 + q[1] ** 2 == pytest.approx(1.0, abs=1e-9)
    # p - q is parallel to the boundary normal at q
    n = np.array([q[0] / a**2, q[1]])
    v = p - q
    cross = n[0] * v[1] - n[1] * v[0]
    assert abs(cross) <= 1e-8 * (np.linalg.norm(n) * np.linalg.norm(v) + 1e-12)


@pytest.mark.parametrize("y", [0.0, 1.4e-45, 1e-300, 1e-13, 1e-8])
def test_ellipse_distance_near_major_axis(y):
    # inside the evolute segment the nearest point is off-axis: d = b sqrt(1 - x^2/(a^2 - b^2))
    x = 0.125
    d = Ellipse().signed_distance(np.array([[x, y]]))[0]
    assert d == pytest.approx(math.sqrt(1 - x * x / 1.25), abs=1e-8)
