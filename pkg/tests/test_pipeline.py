import numpy as np
import pytest

from spinc_immersion import pipeline
from spinc_immersion.errors import InputError
from spinc_immersion.grid import ChartGrid


def test_parse_gauge():
    g = ChartGrid.covering((0, 0), (1, 2), (5, 5))
    assert pipeline.parse_gauge(None) is None
    assert pipeline.parse_gauge("none") is None
    assert np.array_equal(pipeline.parse_gauge("const:0.5")(g), np.full(g.shape, 0.5))
    uv = pipeline.parse_gauge("uv")(g)
    assert np.allclose(uv, g.coords()[..., 0] * g.coords()[..., 1])
    for bad in ("const:x", "spiral", ""):
        with pytest.raises(InputError):
            pipeline.parse_gauge(bad)


def test_tolerances_scale_with_h_squared():
    g1 = ChartGrid.covering((0, 0), (1, 1), (33, 33))
    g2 = ChartGrid.covering((0, 0), (1, 1), (65, 65))
    t1, c1 = pipeline.tolerances_for("sphere", g1)
    t2, _ = pipeline.tolerances_for("sphere", g2)
    assert np.isclose(t1["killing"] / t2["killing"], 4.0)
    assert t1["unit"] == t2["unit"] == 1e-10
    assert c1["killing"] == pipeline.CALIBRATED_C["sphere"]["killing"]
    # uncalibrated quantities sit at the floor
    assert t1["normconn"] == pipeline.TOL_FLOOR


def test_tolerance_overrides_and_defaults():
    g = ChartGrid.covering((0, 0), (1, 1), (9, 9))
    tol, _ = pipeline.tolerances_for("plane", g, {"killing": 0.5})
    assert tol["killing"] == 0.5
    _, used = pipeline.tolerances_for("not-calibrated", g)
    assert set(used.values()) == {pipeline.DEFAULT_C}
    with pytest.raises(InputError):
        pipeline.tolerances_for("plane", g, {"bogus": 1.0})
    with pytest.raises(InputError):
        pipeline.tolerances_for("plane", g, {"killing": 0.0})


def test_fit_order():
    hs = [0.1, 0.05, 0.025]
    assert np.isclose(pipeline.fit_order(hs, [3 * h**2 for h in hs]), 2.0)
    assert np.isclose(pipeline.fit_order(hs, [h for h in hs]), 1.0)
    assert pipeline.fit_order(hs, [1e-14, 0.0, 3e-15]) == "exact"
    assert np.isnan(pipeline.fit_order(hs, [1.0, 0.0, 1.0]))


def test_build_grid_errors():
    from spinc_immersion import scenarios
    sc = scenarios.get("sphere")
    with pytest.raises(InputError):
        pipeline.build_grid(sc, (32, 32, 32))
    with pytest.raises(InputError):
        pipeline.build_grid(sc, 4)
    g = pipeline.build_grid(sc, (16, 20), spacing=0.01)
    assert g.extents == (16, 20) and g.spacing == (0.01, 0.01)


def test_run_scenario_plane_summary():
    run = pipeline.run_scenario("plane", 16)
    s = run.summary
    assert s["verdict"] == "pass" and s["first_failure"] is None
    assert list(s["passed"]) == list(pipeline.CHECK_ORDER)
    assert s["killing_argmax"] == [0, 0]
    assert s["gauge"] == "none"


def test_run_scenario_reports_first_failure():
    run = pipeline.run_scenario("sphere", 32, tolerances={"metric": 1e-15, "B": 1e-15})
    assert run.summary["first_failure"] == "metric"
    assert not run.passed


def test_convergence_requires_three_grids():
    with pytest.raises(InputError):
        pipeline.convergence("plane", [16, 32])


def test_convergence_plane_is_exact():
    rep = pipeline.convergence("plane", [16, 24, 32])
    assert rep["verdict"] == "pass"
    assert set(rep["orders"].values()) == {"exact"}
