import csv
import math

import numpy as np
import pytest
from conftest import solved
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from inflap.analysis import (
    Termination,
    _envelope_2d,
    _lower_envelope_1d,
    check_p_along_flow,
    check_p_bounds,
    gradient_flow,
    holder_exponent_near_max,
    max_set_mask,
    p_function,
    sup_convolution,
    write_trajectory_csv,
)
from inflap.errors import ConfigurationError, InsufficientDataError, InvalidStartError
from inflap.geometry import C0, Ball, web_function
from inflap.grid import ScalarField, build_grid


@pytest.fixture(scope="module")
def phi_ball():
    g = build_grid(Ball(), 128)
    return ScalarField.from_function(g, lambda p: web_function(Ball(), p))


def test_p_is_constant_for_exact_web_function(phi_ball):
    # on the ball P = |grad phi|^4/4 + phi = c0 everywhere
    p = p_function(phi_ball, Ball())
    v = p.values.values
    c = phi_ball.grid.coords()
    far = np.hypot(c[..., 0], c[..., 1]) > 0.1
    assert np.nanmax(np.abs(v[far] - C0)) < 0.01
    assert p.min_boundary_quarter_grad == pytest.approx(C0, rel=0.03)
    res = check_p_bounds(p, 0.05 * C0)
    assert res.passed and res.measured["violations"] == 0


def test_p_bounds_reports_violations(phi_ball):
    p = p_function(phi_ball, Ball())
    bad = ScalarField(phi_ball.grid, phi_ball.values * 1.5, dirichlet_zero=False)
    res = check_p_bounds(p_function(bad, Ball()), 0.0)
    assert not res.passed and res.measured["violations"] > 0
    assert 0 < len(res.details["worst"]) <= 5
    assert check_p_bounds(p, 0.05).to_dict()["name"] == "p_bounds"


def test_flow_on_exact_web_function(phi_ball):
    g = phi_ball.grid
    tr = gradient_flow(phi_ball, [0.9, 0.0])
    assert tr.terminated == Termination.REACHED_MAX_SET
    assert np.all(np.diff(tr.u) > 0)
    assert np.linalg.norm(tr.points[-1]) <= 5 * g.h
    # the path is radial
    assert np.max(np.abs(tr.points[:, 1])) < 1e-9
    # u(t) = c0 - (sqrt(c0 - u0) - t)^2 along the path; arrival at sqrt(c0 - u0)
    m = float(web_function(Ball(), np.array([[0.9, 0.0]]))[0])
    assert tr.arrival_time == pytest.approx(math.sqrt(C0 - m), rel=0.03)
    fit = check_p_along_flow(None, tr, 0.03 * C0)
    assert fit.passed
    assert fit.measured["lambda_fit"] == pytest.approx(C0, rel=0.02)


def test_flow_rejects_bad_starts(phi_ball):
    for s in ([2.0, 0.0], [np.nan, 0.0], [0.0, 0.0], [1.0]):
        with pytest.raises(InvalidStartError):
            gradient_flow(phi_ball, s)


def test_flow_check_needs_samples(phi_ball):
    tr = gradient_flow(phi_ball, [0.5, 0.5], t_max=0.0)
    with pytest.raises(InsufficientDataError):
        check_p_along_flow(None, tr, 1.0)


def test_trajectory_csv(tmp_path, phi_ball):
    tr = gradient_flow(phi_ball, [0.0, -0.8])
    path = tmp_path / "t.csv"
    write_trajectory_csv(path, tr)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t", "x", "y", "u", "gradnorm", "P"]
    back = np.array(rows[1:], dtype=float)
    assert np.array_equal(back, tr.samples)
    assert not any(c == "-0" for r in rows for c in r)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(1, 40), elements=st.floats(-50, 50)))
def test_lower_envelope_matches_brute_force(f):
    n = len(f)
    out = np.empty(n)
    _lower_envelope_1d(f, out, np.empty(n, dtype=np.int64), np.empty(n + 1))
    q = np.arange(n)
    brute = np.min(f[None, :] + (q[:, None] - q[None, :]) ** 2, axis=1)
    np.testing.assert_allclose(out, brute, rtol=1e-12, atol=1e-9)


def test_envelope_2d_with_holes_matches_brute_force():
    rng = np.random.default_rng(3)
    f = rng.normal(size=(9, 11)) * 5
    f[rng.random(f.shape) < 0.3] = np.inf
    jj, ii = np.mgrid[0:9, 0:11]
    fin = np.isfinite(f)
    d2 = (jj[..., None] - jj[fin]) ** 2 + (ii[..., None] - ii[fin]) ** 2
    brute = np.min(f[fin] + d2, axis=-1)
    np.testing.assert_allclose(_envelope_2d(f), brute, atol=1e-9)


def test_sup_convolution_properties():
    _, g, sol, _ = solved("ball", 128)
    u = sol.u
    sc = sup_convolution(u, 2 * g.h)
    m = g.inside_mask
    assert np.all(sc.u_eps.values[m] >= u.values[m])
    assert np.nanmax(sc.u_eps.values) == pytest.approx(np.nanmax(u.values), abs=1e-12)
    assert sc.Omega_eps_mask.any()
    assert np.all(sc.A_eps_mask <= sc.U_eps_mask) and np.all(sc.Omega_eps_mask <= sc.A_eps_mask)
    assert np.all(sc.u_eps.values[sc.Omega_eps_mask] > sc.m_eps)
    with pytest.raises(ConfigurationError):
        sup_convolution(u, 1.0)
    with pytest.raises(ConfigurationError):
        sup_convolution(u, 0.0)


def test_holder_exponent_of_web_function(phi_ball):
    fit = holder_exponent_near_max(phi_ball)
    assert fit.alpha == pytest.approx(1 / 3, abs=0.03)
    lo, hi = fit.band
    assert lo <= fit.alpha <= hi
    assert max_set_mask(phi_ball).sum() >= 1


def test_holder_exponent_needs_three_radii(phi_ball):
    with pytest.raises(InsufficientDataError):
        holder_exponent_near_max(phi_ball, fit_radii=[0.1, 0.2])
    with pytest.raises(InsufficientDataError):
        holder_exponent_near_max(phi_ball, fit_radii=[1e-6, 0.9, 0.1, 0.2])
