"""Built-in analytic immersions with exact jets.

Each scenario is written once as a sympy expression; first and second
derivatives are derived symbolically and compiled with ``lambdify``.  Chart
rectangles stay away from coordinate singularities, and every entry records
which way its normal frame points so the signs of ``B`` are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable

import numpy as np
import sympy as sp

from .errors import DomainExceeded
from .frames import ImmersionPatch
from .grid import ChartGrid

U, V, W = sp.symbols("u v w", real=True)
_CHART_SYMBOLS = (U, V, W)


@dataclass(frozen=True)
class Scenario:
    name: str
    n: int
    m: int
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    build: Callable[..., list] = field(repr=False)
    params: dict = field(default_factory=dict)
    normal_orientation: str = ""
    metric: Callable[..., np.ndarray] | None = field(default=None, repr=False)
    second_form: Callable[..., np.ndarray] | None = field(default=None, repr=False)

    @property
    def d(self) -> int:
        return self.n + self.m

    @property
    def symbols(self) -> tuple:
        return _CHART_SYMBOLS[: self.n]

    def with_params(self, **overrides) -> "Scenario":
        """Copy with parameter or chart-bound overrides (``lower``/``upper`` accepted)."""
        lower = tuple(overrides.pop("lower", self.lower))
        upper = tuple(overrides.pop("upper", self.upper))
        unknown = set(overrides) - set(self.params)
        if unknown:
            raise KeyError(f"{self.name} has no parameters {sorted(unknown)}")
        return replace(self, lower=lower, upper=upper, params={**self.params, **overrides})

    @cached_property
    def _compiled(self):
        F = sp.Matrix(self.build(*self.symbols, **self.params))
        dF = [F.diff(s) for s in self.symbols]
        d2F = [[F.diff(s).diff(t) for t in self.symbols] for s in self.symbols]
        return (
            sp.lambdify(self.symbols, list(F), "numpy"),
            [sp.lambdify(self.symbols, list(c), "numpy") for c in dF],
            [[sp.lambdify(self.symbols, list(c), "numpy") for c in row] for row in d2F],
        )

    def grid(self, extents, lower=None, upper=None) -> ChartGrid:
        if isinstance(extents, int):
            extents = (extents,) * self.n
        return ChartGrid.covering(lower or self.lower, upper or self.upper, extents)


def _evaluate(fn, coords: np.ndarray) -> np.ndarray:
    args = [coords[..., i] for i in range(coords.shape[-1])]
    vals = fn(*args)
    shape = coords.shape[:-1]
    return np.stack([np.broadcast_to(np.asarray(v, dtype=float), shape) for v in vals], axis=-1)


def sample(scenario: Scenario, grid: ChartGrid, tol: float = 1e-9) -> ImmersionPatch:
    """Evaluate ``F`` and its exact first and second derivatives on every node."""
    if grid.n != scenario.n:
        raise DomainExceeded(f"{scenario.name} has a {scenario.n}-dimensional chart, grid has {grid.n}")
    for axis, (lo, hi, a, b) in enumerate(zip(grid.origin, grid.upper, scenario.lower, scenario.upper)):
        if lo < a - tol or hi > b + tol:
            raise DomainExceeded(
                f"{scenario.name}: axis {axis} spans [{lo:g}, {hi:g}], allowed [{a:g}, {b:g}]"
            )
    f, df, d2f = scenario._compiled
    x = grid.coords()
    F = _evaluate(f, x)
    dF = np.stack([_evaluate(g, x) for g in df], axis=grid.n)
    d2F = np.stack([np.stack([_evaluate(g, x) for g in row], axis=grid.n) for row in d2f], axis=grid.n)
    return ImmersionPatch(grid, F, dF, d2F, name=scenario.name)


def _plane(u, v):
    return [u, v, 0]


def _sphere(u, v, radius):
    return [radius * sp.cos(u) * sp.cos(v), radius * sp.sin(u) * sp.cos(v), radius * sp.sin(v)]


def _cylinder(u, v, radius):
    return [radius * sp.cos(u), radius * sp.sin(u), v]


def _torus(u, v, R, r):
    return [(R + r * sp.cos(v)) * sp.cos(u), (R + r * sp.cos(v)) * sp.sin(u), r * sp.sin(v)]


def _helicoid(u, v, pitch):
    return [u * sp.cos(v), u * sp.sin(v), pitch * v]


def _clifford_torus(u, v):
    s = 1 / sp.sqrt(2)
    return [s * sp.cos(u), s * sp.sin(u), s * sp.cos(v), s * sp.sin(v)]


def _three_sphere(u, v, w):
    return [
        sp.cos(u) * sp.cos(v) * sp.cos(w),
        sp.sin(u) * sp.cos(v) * sp.cos(w),
        sp.sin(v) * sp.cos(w),
        sp.sin(w),
    ]


def _sphere_metric(x, radius=1.0):
    g = np.zeros(x.shape[:-1] + (2, 2))
    g[..., 0, 0] = radius**2 * np.cos(x[..., 1]) ** 2
    g[..., 1, 1] = radius**2
    return g


def _sphere_B(x, radius=1.0):
    # outward normal: B = -g / radius
    return -_sphere_metric(x, radius)[..., None, :, :] / radius


def _cylinder_metric(x, radius=1.0):
    g = np.zeros(x.shape[:-1] + (2, 2))
    g[..., 0, 0] = radius**2
    g[..., 1, 1] = 1.0
    return g


def _cylinder_B(x, radius=1.0):
    B = np.zeros(x.shape[:-1] + (1, 2, 2))
    B[..., 0, 0, 0] = -radius
    return B


def _flat_metric(x, scale=1.0):
    return np.broadcast_to(scale * np.eye(x.shape[-1]), x.shape[:-1] + (x.shape[-1],) * 2).copy()


def _three_sphere_metric(x, **_):
    cv, cw = np.cos(x[..., 1]), np.cos(x[..., 2])
    g = np.zeros(x.shape[:-1] + (3, 3))
    g[..., 0, 0] = (cv * cw) ** 2
    g[..., 1, 1] = cw**2
    g[..., 2, 2] = 1.0
    return g


CATALOG: dict[str, Scenario] = {
    s.name: s
    for s in [
        Scenario("plane", 2, 1, (-1.0, -1.0), (1.0, 1.0), _plane,
                 normal_orientation="+e3",
                 metric=lambda x, **_: _flat_metric(x),
                 second_form=lambda x, **_: np.zeros(x.shape[:-1] + (1, 2, 2))),
        Scenario("sphere", 2, 1, (-1.2, -1.2), (1.2, 1.2), _sphere, {"radius": 1.0},
                 normal_orientation="outward radial; chart-component B = -g/radius",
                 metric=_sphere_metric, second_form=_sphere_B),
        Scenario("cylinder", 2, 1, (-1.5, -1.0), (1.5, 1.0), _cylinder, {"radius": 1.0},
                 normal_orientation="outward radial; B = diag(-radius, 0) in chart components",
                 metric=_cylinder_metric, second_form=_cylinder_B),
        Scenario("torus", 2, 1, (-1.5, -1.5), (1.5, 1.5), _torus, {"R": 2.0, "r": 1.0},
                 normal_orientation="outward from the core circle"),
        Scenario("helicoid", 2, 1, (-1.0, -1.5), (1.0, 1.5), _helicoid, {"pitch": 1.0},
                 normal_orientation="d_u F x d_v F direction"),
        Scenario("clifford-torus", 2, 2, (-1.2, -1.2), (1.2, 1.2), _clifford_torus,
                 normal_orientation="normal pair completes the frame positively; carried by the sweep",
                 metric=lambda x, **_: _flat_metric(x, 0.5)),
        Scenario("three-sphere", 3, 1, (-1.0, -1.0, -1.0), (1.0, 1.0, 1.0), _three_sphere,
                 normal_orientation="outward radial",
                 metric=_three_sphere_metric),
    ]
}


def catalog() -> list[Scenario]:
    return list(CATALOG.values())


def get(name: str, **overrides) -> Scenario:
    try:
        scenario = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; known: {', '.join(CATALOG)}") from None
    return scenario.with_params(**overrides) if overrides else scenario


def analytic_metric(scenario: Scenario, grid: ChartGrid) -> np.ndarray | None:
    if scenario.metric is None:
        return None
    return scenario.metric(grid.coords(), **scenario.params)


def analytic_second_form(scenario: Scenario, grid: ChartGrid) -> np.ndarray | None:
    """Chart components ``B[..., a, k, l]`` for the documented normal orientation."""
    if scenario.second_form is None:
        return None
    return scenario.second_form(grid.coords(), **scenario.params)
