"""Shared solved fields (cached per session) and the acceptance summary."""

from __future__ import annotations

import time

import pytest

from inflap.geometry import Ball, Ellipse, Stadium, square
from inflap.grid import build_grid
from inflap.solver import solve_dirichlet

DOMAINS = {
    "ball": Ball(),
    "stadium": Stadium(),
    "ellipse": Ellipse(),
    "square": square(),
}

_cache: dict = {}


def solved(name: str, resolution: int):
    """(domain, grid, SolveResult, seconds) for a named test domain, solved once per session."""
    key = (name, resolution)
    if key not in _cache:
        dom = DOMAINS[name]
        grid = build_grid(dom, resolution)
        t = time.perf_counter()
        sol = solve_dirichlet(dom, grid)
        _cache[key] = (dom, grid, sol, time.perf_counter() - t)
    return _cache[key]


@pytest.fixture(scope="session")
def solve_cache():
    return solved


# acceptance lines: criterion -> (passed, message); filled by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k[0]), k)):
        ok, msg = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {msg}")
