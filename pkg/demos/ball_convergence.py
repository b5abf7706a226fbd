"""Grid convergence on the unit ball, where the solution is known in closed form.

    python demos/ball_convergence.py
"""

import time

import numpy as np

from inflap.analysis import holder_exponent_near_max
from inflap.geometry import C0, Ball, web_function
from inflap.grid import build_grid
from inflap.solver import solve_dirichlet


def main() -> None:
    dom = Ball()
    prev = None
    print(f"{'res':>4s} {'sweeps':>7s} {'sec':>6s} {'mu err':>8s} {'Linf':>8s} {'order':>6s} {'alpha':>6s}")
    for res in (32, 64, 128, 256):
        grid = build_grid(dom, res)
        t = time.perf_counter()
        sol = solve_dirichlet(dom, grid)
        dt = time.perf_counter() - t
        m = grid.inside_mask
        phi = web_function(dom, grid.coords()[m])
        err = float(np.max(np.abs(sol.u.values[m] - phi)) / C0)
        order = "" if prev is None else f"{np.log2(prev / err):6.2f}"
        alpha = holder_exponent_near_max(sol.u).alpha
        mu_err = abs(np.nanmax(sol.u.values) - C0) / C0
        print(f"{res:4d} {sol.iterations:7d} {dt:6.1f} {mu_err:8.4f} {err:8.4f} {order:>6s} {alpha:6.3f}")
        prev = err


if __name__ == "__main__":
    main()
