"""End-to-end scenario runs: immersion -> spinor -> Killing residual -> xi -> F -> validators.

Differentiated checks use tolerances ``C * h**2`` with ``h`` the largest grid
spacing and ``C`` calibrated per scenario (about twice the worst constant seen
on the reference grid sequences), floored at ``TOL_FLOOR``.  Algebraic checks
use fixed tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import frames, scenarios, spinfield, weierstrass
from .errors import InputError
from .grid import ChartGrid

TOL_FLOOR = 1e-12
# quantities below this on every grid are reported as exact rather than fitted
EXACT_FLOOR = 1e-10

CHECK_ORDER = ("unit", "xi", "killing", "dxi", "path", "metric", "B", "normconn", "roundtrip")
DIFFERENTIATED = ("killing", "dxi", "path", "metric", "roundtrip")
DOUBLY_DIFFERENTIATED = ("B", "normconn")
FIXED_TOLERANCES = {"unit": 1e-10, "xi": 1e-9}
ORDER_FLOORS = {**{k: 1.5 for k in DIFFERENTIATED}, **{k: 1.0 for k in DOUBLY_DIFFERENTIATED}}

# C per scenario and check; missing entries mean the quantity is zero up to rounding
CALIBRATED_C: dict[str, dict[str, float]] = {
    "plane": {},
    "sphere": {"killing": 0.25, "dxi": 1.0, "metric": 1.0, "B": 2.0, "roundtrip": 0.15},
    "cylinder": {"killing": 0.1, "metric": 1.0, "B": 2.0, "roundtrip": 0.15},
    "torus": {"killing": 0.25, "dxi": 1.0, "metric": 9.0, "B": 5.0, "roundtrip": 0.4},
    "helicoid": {"killing": 0.2, "dxi": 0.7, "path": 0.7, "metric": 1.4, "B": 0.6, "normconn": 0.5,
                 "roundtrip": 0.08},
    "clifford-torus": {"killing": 0.1, "metric": 0.5, "B": 1.2, "roundtrip": 0.11},
    "three-sphere": {"killing": 0.25, "dxi": 0.9, "metric": 1.0, "B": 1.7, "roundtrip": 0.14},
}
# used for scenarios added without calibration: the loosest constant above
DEFAULT_C = 9.0


def parse_gauge(text: str | None):
    """``none``, ``const:THETA`` or ``uv`` to a function of the grid (``None`` for no gauge change)."""
    if text is None or text == "none":
        return None
    if text == "uv":
        return lambda grid: grid.coords()[..., 0] * grid.coords()[..., 1]
    if text.startswith("const:"):
        try:
            theta = float(text[len("const:"):])
        except ValueError:
            raise InputError(f"bad constant gauge {text!r}") from None
        return lambda grid: np.full(grid.shape, theta)
    raise InputError(f"unknown gauge {text!r}; use none, const:THETA or uv")


def tolerances_for(scenario: str, grid: ChartGrid, overrides: dict | None = None) -> tuple[dict, dict]:
    """Tolerances for every check plus the constants they were derived from."""
    consts = CALIBRATED_C.get(scenario)
    tol, used = {}, {}
    for key in CHECK_ORDER:
        if key in FIXED_TOLERANCES:
            tol[key] = FIXED_TOLERANCES[key]
            continue
        c = DEFAULT_C if consts is None else consts.get(key, 0.0)
        used[key] = c
        tol[key] = max(c * grid.h**2, TOL_FLOOR)
    for key, value in (overrides or {}).items():
        if key not in tol:
            raise InputError(f"unknown tolerance key {key!r}; known: {', '.join(CHECK_ORDER)}")
        if not value > 0:
            raise InputError(f"tolerance {key} must be positive, got {value}")
        tol[key] = float(value)
    return tol, used


@dataclass
class ScenarioRun:
    """Everything a single verification run produced; ``summary`` is what gets written."""

    summary: dict
    patch: frames.ImmersionPatch = field(repr=False)
    phi: spinfield.SpinorField = field(repr=False)
    A: spinfield.U1ConnectionField = field(repr=False)
    residual: spinfield.KillingResidual = field(repr=False)
    xi: weierstrass.OneFormField = field(repr=False)
    closedness: np.ndarray = field(repr=False)
    reconstruction: weierstrass.ReconstructedImmersion = field(repr=False)
    aligned: np.ndarray = field(repr=False)
    reports: dict = field(repr=False)

    @property
    def passed(self) -> bool:
        return self.summary["verdict"] == "pass"


def build_grid(scenario: scenarios.Scenario, extents, spacing=None) -> ChartGrid:
    if isinstance(extents, int):
        extents = (extents,) * scenario.n
    extents = tuple(int(e) for e in extents)
    if len(extents) != scenario.n:
        raise InputError(f"{scenario.name} needs {scenario.n} grid extents, got {len(extents)}")
    try:
        if spacing is None:
            return scenario.grid(extents)
        spacing = (float(spacing),) * scenario.n if np.isscalar(spacing) else tuple(map(float, spacing))
        return ChartGrid(extents, spacing, scenario.lower)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def run_scenario(name: str, extents, gauge: str | None = None, spacing=None,
                 params: dict | None = None, tolerances: dict | None = None) -> ScenarioRun:
    scenario = scenarios.get(name, **(params or {}))
    grid = build_grid(scenario, extents, spacing)
    patch = scenarios.sample(scenario, grid)
    frame = frames.build_adapted_frame(patch)
    B = frames.second_fundamental_form(patch, frame)
    omega = frames.connection_forms(patch, frame)
    phi, A = spinfield.restricted_parallel_spinor(frame)
    theta = parse_gauge(gauge)
    if theta is not None:
        phi, A = spinfield.gauge_transform(phi, A, theta(grid))

    residual = spinfield.killing_residual(phi, B, omega, A)
    xi = weierstrass.build_one_form(phi)
    closed = weierstrass.closedness_residual(xi)
    base = (0,) * grid.n
    rec = weierstrass.integrate_one_form(xi, base, patch.F[base], strict=False)
    reports = {
        "metric": weierstrass.verify_isometry(rec, frames.induced_metric(patch)),
        "B": weierstrass.verify_second_fundamental_form(rec, phi, B),
        "normconn": weierstrass.verify_normal_connection(rec, phi, omega),
    }
    align = weierstrass.rigid_align(rec.F, patch.F)
    aligned = rec.F @ align.rotation.T + align.translation

    measured = {
        "unit": float(phi.unit_defect().max()),
        "xi": float(np.abs(xi.xi - patch.first_derivatives()).max()),
        "killing": residual.max,
        "dxi": float(closed.max()),
        "path": rec.path_discrepancy,
        "metric": reports["metric"].max_error,
        "B": reports["B"].max_error,
        "normconn": reports["normconn"].max_error,
        "roundtrip": align.rms,
    }
    tol, consts = tolerances_for(scenario.name, grid, tolerances)
    passed = {k: bool(measured[k] <= tol[k]) for k in CHECK_ORDER}
    failing = next((k for k in CHECK_ORDER if not passed[k]), None)
    summary = {
        "scenario": scenario.name,
        "params": dict(scenario.params),
        "normal_orientation": scenario.normal_orientation,
        "grid": grid.to_json(),
        "h": grid.h,
        "gauge": gauge or "none",
        "max_killing_residual": measured["killing"],
        "killing_argmax": list(residual.argmax),
        "max_dxi": measured["dxi"],
        "metric_err": measured["metric"],
        "B_err": measured["B"],
        "normconn_err": measured["normconn"],
        "roundtrip_rms": measured["roundtrip"],
        "path_discrepancy": measured["path"],
        "unit_defect": measured["unit"],
        "xi_vs_dF": measured["xi"],
        "orders": {},
        "tolerances": tol,
        "calibrated_C": consts,
        "passed": passed,
        "first_failure": failing,
        "verdict": "pass" if failing is None else "fail",
    }
    return ScenarioRun(summary, patch, phi, A, residual, xi, closed, rec, aligned, reports)


def fit_order(hs, errs) -> float | str:
    """Least-squares slope of ``log err`` against ``log h``; ``"exact"`` at the rounding floor."""
    errs = np.asarray(errs, dtype=float)
    if np.all(errs <= EXACT_FLOOR):
        return "exact"
    if np.any(errs <= 0):
        return float("nan")
    slope, _ = np.polyfit(np.log(np.asarray(hs, dtype=float)), np.log(errs), 1)
    return float(slope)


SUMMARY_KEYS = {
    "killing": "max_killing_residual",
    "dxi": "max_dxi",
    "metric": "metric_err",
    "B": "B_err",
    "normconn": "normconn_err",
    "roundtrip": "roundtrip_rms",
    "path": "path_discrepancy",
}


def convergence(name: str, grids, gauge: str | None = None, params: dict | None = None,
                floors: dict | None = None) -> dict:
    """Run a scenario on several grids and fit convergence orders per quantity."""
    grids = list(grids)
    if len(grids) < 3:
        raise InputError(f"convergence needs at least 3 grids, got {len(grids)}")
    floors = {**ORDER_FLOORS, **(floors or {})}
    runs = [run_scenario(name, g, gauge=gauge, params=params).summary for g in grids]
    hs = [r["h"] for r in runs]
    orders, order_ok = {}, {}
    for key, skey in SUMMARY_KEYS.items():
        p = fit_order(hs, [r[skey] for r in runs])
        orders[key] = p
        order_ok[key] = p == "exact" or (not math.isnan(p) and p >= floors[key])
    failing = next((k for k in SUMMARY_KEYS if not order_ok[k]), None)
    return {
        "scenario": runs[0]["scenario"],
        "gauge": gauge or "none",
        "grids": [r["grid"]["extents"] for r in runs],
        "h": hs,
        "errors": {k: [r[s] for r in runs] for k, s in SUMMARY_KEYS.items()},
        "orders": orders,
        "order_floors": {k: floors[k] for k in SUMMARY_KEYS},
        "order_passed": order_ok,
        "runs": runs,
        "first_failure": failing,
        "verdict": "pass" if failing is None else "fail",
    }
