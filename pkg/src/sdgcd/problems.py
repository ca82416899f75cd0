"""Manufactured solutions for the three benchmark experiments on the unit square."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy

from .forms import ConvectionField

_x, _y = sympy.symbols("x y", real=True)


@dataclass(frozen=True)
class ManufacturedProblem:
    """Exact solution and data of ``-mu lap u + b . grad u = f``, ``u = g`` on the boundary."""

    name: str
    u_exact: Callable
    grad_u_exact: Callable
    b: ConvectionField
    mu: float
    f: Callable
    g: Callable | None
    homogeneous: bool


def _numeric(expr):
    fn = sympy.lambdify((_x, _y), expr, "numpy")

    def wrapped(x, y):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(fn(x, np.asarray(y, dtype=float)), np.broadcast_shapes(x.shape, np.shape(y))).astype(float)

    return wrapped


def _numeric_vec(e1, e2):
    f1, f2 = _numeric(e1), _numeric(e2)
    return lambda x, y: (f1(x, y), f2(x, y))


def from_expressions(name, u, b1, b2, mu, homogeneous, sup_norm=None) -> ManufacturedProblem:
    """Build a problem from sympy expressions in ``x, y``; f is derived symbolically."""
    ux, uy = sympy.diff(u, _x), sympy.diff(u, _y)
    f = -mu * (sympy.diff(ux, _x) + sympy.diff(uy, _y)) + b1 * ux + b2 * uy
    field = ConvectionField(_numeric_vec(b1, b2), divergence_free=True, sup_norm_hint=sup_norm)
    u_fn = _numeric(u)
    return ManufacturedProblem(
        name=name,
        u_exact=u_fn,
        grad_u_exact=_numeric_vec(ux, uy),
        b=field,
        mu=float(mu),
        f=_numeric(f),
        g=None if homogeneous else u_fn,
        homogeneous=homogeneous,
    )


def make_problem(experiment: int, mu: float | None = None, b=(20.0, 20.0)) -> ManufacturedProblem:
    """Experiment 1: constant field with boundary layers at x = 1 and y = 1 (mu = 1);
    normalised by (1 - e^-b1)(1 - e^-b2) so that u is of unit size.
    Experiment 2: rotating field, u = sin(2 pi x) cos(2 pi y), inhomogeneous data.
    Experiment 3: same field, u = sin(2 pi x) sin(2 pi y), homogeneous data.
    """
    pi = sympy.pi
    if experiment == 1:
        mu = 1.0 if mu is None else mu
        b1, b2 = (sympy.Float(v) for v in b)
        u = (
            _x * _y * (1 - sympy.exp(b1 * (_x - 1))) * (1 - sympy.exp(b2 * (_y - 1)))
            / ((1 - sympy.exp(-b1)) * (1 - sympy.exp(-b2)))
        )
        return from_expressions("experiment1", u, b1, b2, mu, True, float(np.hypot(*b)))
    if experiment in (2, 3):
        if mu is None:
            raise ValueError(f"experiment {experiment} needs a diffusivity")
        b1 = (1 - sympy.cos(2 * pi * _x)) * sympy.sin(2 * pi * _y)
        b2 = -sympy.sin(2 * pi * _x) * (1 - sympy.cos(2 * pi * _y))
        if experiment == 2:
            u = sympy.sin(2 * pi * _x) * sympy.cos(2 * pi * _y)
            return from_expressions("experiment2", u, b1, b2, mu, False, 2.0 * np.sqrt(2.0))
        u = sympy.sin(2 * pi * _x) * sympy.sin(2 * pi * _y)
        return from_expressions("experiment3", u, b1, b2, mu, True, 2.0 * np.sqrt(2.0))
    raise ValueError(f"unknown experiment id {experiment!r}")
