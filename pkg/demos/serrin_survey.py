"""Solve the four reference domains and print the overdetermined-problem diagnostics.

    python demos/serrin_survey.py [resolution]
"""

import sys

from inflap.geometry import C0, Ball, Ellipse, Stadium, square
from inflap.grid import build_grid
from inflap.serrin import serrin_diagnose
from inflap.solver import solve_dirichlet


def main(resolution: int = 128) -> None:
    domains = {"ball": Ball(), "stadium": Stadium(), "ellipse": Ellipse(), "square": square()}
    print(f"{'domain':8s} {'mu':>8s} {'c0 rho^4/3':>10s} {'a':>7s} {'(3rho)^1/3':>10s} "
          f"{'spread':>7s} {'cut=high':>8s}  verdict")
    for name, dom in domains.items():
        grid = build_grid(dom, resolution)
        sol = solve_dirichlet(dom, grid)
        rep = serrin_diagnose(dom, resolution, solution=sol)
        pred_mu = C0 * rep.rho ** (4 / 3)
        print(f"{name:8s} {rep.mu:8.4f} {pred_mu:10.4f} {rep.a:7.4f} {rep.predicted_a:10.4f} "
              f"{rep.boundary_grad_relative_spread:7.4f} {str(rep.cut_high_verdict):>8s}  {rep.verdict.value}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 128)
