import numpy as np
import pytest
from conftest import solved

from inflap.errors import ConfigurationError
from inflap.geometry import Ball, Ellipse, Stadium, square, web_function
from inflap.grid import ScalarField, build_grid
from inflap.reports import validate
from inflap.serrin import (
    SerrinTolerances,
    Verdict,
    _decide,
    hypothesis_flags,
    serrin_diagnose,
    stadium_reconstruct,
    web_agreement,
)

PRED = 3 ** (1 / 3)


def decide(**kw):
    base = dict(converged=True, under_resolved=False, spread=0.01, p_spread=0.01, a=PRED,
                pred=PRED, cut_high=True, diametral=True, tol_a=0.05, tol_p=0.05)
    base.update(kw)
    return _decide(**base)


def test_decision_rules():
    assert decide() == Verdict.CONSISTENT
    assert decide(converged=False) == Verdict.INCONCLUSIVE
    assert decide(under_resolved=True) == Verdict.INCONCLUSIVE
    assert decide(spread=0.11) == Verdict.INCONSISTENT
    # between tol_a and 2 tol_a with cut = high: no call either way
    assert decide(spread=0.07) == Verdict.INCONCLUSIVE
    assert decide(cut_high=False) == Verdict.INCONSISTENT
    assert decide(cut_high=False, diametral=False) == Verdict.INCONCLUSIVE
    assert decide(a=PRED * 1.2) == Verdict.INCONCLUSIVE
    assert decide(p_spread=0.06) == Verdict.INCONCLUSIVE


def test_tolerances_scale_with_h():
    t = SerrinTolerances()
    assert t.scaled(128) == (0.05, 0.05)
    assert t.scaled(256) == pytest.approx((0.025, 0.025))
    assert SerrinTolerances.from_dict({"a": 0.1}).a == 0.1
    for bad in ({"a": 0}, {"reference_resolution": 8}, {"min_inradius_cells": 1}, {"b": 1}):
        with pytest.raises(ConfigurationError):
            SerrinTolerances.from_dict(bad)


def test_web_agreement_of_web_function():
    dom = Stadium()
    g = build_grid(dom, 64)
    phi = ScalarField.from_function(g, lambda p: web_function(dom, p))
    w = web_agreement(phi, dom)
    assert w.linf < 1e-12 and w.l2 < 1e-12 and w.nodes > 0
    off = ScalarField(g, phi.values * 1.1, dirichlet_zero=False)
    assert web_agreement(off, dom).linf == pytest.approx(0.1 / 1.1, rel=1e-9)


def test_reconstruction():
    st = stadium_reconstruct(Stadium())
    assert isinstance(st.shape, Stadium)
    assert st.hausdorff <= 2 * (1.0 / 32)
    b = stadium_reconstruct(Ball((0.5, -0.25), 2.0))
    assert isinstance(b.shape, Ball)
    np.testing.assert_allclose(b.shape.center, (0.5, -0.25), atol=1e-12)
    assert b.hausdorff < 1e-9
    assert stadium_reconstruct(Ellipse()) is None


def test_hypothesis_flags():
    assert hypothesis_flags(Ball()) == ["hΩ_ok", "Hu_assumed"]
    assert hypothesis_flags(square()) == ["Hu_assumed"]


@pytest.mark.parametrize("name,verdict", [
    ("ball", Verdict.CONSISTENT),
    ("stadium", Verdict.CONSISTENT),
    ("ellipse", Verdict.INCONSISTENT),
    ("square", Verdict.INCONSISTENT),
])
def test_verdicts_at_128(name, verdict):
    dom, g, sol, _ = solved(name, 128)
    rep = serrin_diagnose(dom, 128, solution=sol)
    assert rep.verdict == verdict
    doc = rep.to_dict()
    validate(doc, "serrin")
    assert doc["hypothesis_flags"] == hypothesis_flags(dom)
    assert {t["field"] for t in doc["paper_tags"]} <= set(doc)


def test_under_resolved_is_inconclusive():
    dom, g, sol, _ = solved("ball", 128)
    rep = serrin_diagnose(dom, 128, solution=sol, tols=SerrinTolerances(min_inradius_cells=128))
    assert rep.verdict == Verdict.INCONCLUSIVE
    assert any("under-resolved" in n for n in rep.notes)


def test_consistent_report_requires_cut_high():
    dom, g, sol, _ = solved("ball", 128)
    rep = serrin_diagnose(dom, 128, solution=sol)
    d = dict(rep.__dict__)
    d["cut_high_verdict"] = False
    with pytest.raises(ValueError):
        type(rep)(**d)
