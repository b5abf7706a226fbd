"""Numerical lab for -Delta_inf u = 1 with zero boundary values on convex planar domains."""

from .errors import (
    ConfigurationError,
    DomainError,
    InflapError,
    InsufficientDataError,
    InvalidInputError,
    InvalidStartError,
    UnsupportedError,
)
from .geometry import C0, Ball, ConvexPolygon, Ellipse, Stadium, square
from .grid import ScalarField, build_grid
from .solver import SolverConfig, boundary_gradient, solve_dirichlet

__version__ = "0.1.0"

__all__ = [
    "C0",
    "Ball",
    "Stadium",
    "Ellipse",
    "ConvexPolygon",
    "square",
    "ScalarField",
    "build_grid",
    "SolverConfig",
    "solve_dirichlet",
    "boundary_gradient",
    "InflapError",
    "InvalidInputError",
    "DomainError",
    "ConfigurationError",
    "UnsupportedError",
    "InsufficientDataError",
    "InvalidStartError",
]
