"""Follow the gradient flow from near the boundary of a stadium and compare u along
the path with the one-parameter profile lam - (sqrt(lam - m) - t)^2.

    python demos/flow_profile.py
"""

import math

import numpy as np

from inflap.analysis import check_p_along_flow, gradient_flow
from inflap.geometry import Stadium
from inflap.grid import build_grid
from inflap.solver import solve_dirichlet


def main() -> None:
    dom = Stadium()
    grid = build_grid(dom, 128)
    u = solve_dirichlet(dom, grid).u
    mu = float(np.nanmax(u.values))
    for start in ([0.0, -0.98], [1.7, 0.3], [-1.5, 0.5]):
        tr = gradient_flow(u, start)
        fit = check_p_along_flow(None, tr, 0.03 * mu).measured
        lam, m = fit["lambda_fit"], fit["m"]
        print(f"start {start}: ends at {np.round(tr.points[-1], 3) + 0.0} ({tr.terminated.value})")
        print(f"  P drift {fit['p_drift']:.2e}, profile deviation {fit['profile_max_deviation']:.2e}")
        print(f"  lambda {lam:.4f} (max u {mu:.4f}), arrival {tr.arrival_time:.4f} "
              f"vs sqrt(lambda - m) {math.sqrt(lam - m):.4f}")


if __name__ == "__main__":
    main()
