import numpy as np
import pytest

from spinc_immersion import scenarios
from spinc_immersion.errors import DomainExceeded
from spinc_immersion.frames import induced_metric
from spinc_immersion.grid import ChartGrid, gradient, hessian


def test_catalog_contents():
    dims = {s.name: (s.n, s.m) for s in scenarios.catalog()}
    assert dims == {
        "plane": (2, 1), "sphere": (2, 1), "cylinder": (2, 1), "torus": (2, 1),
        "helicoid": (2, 1), "clifford-torus": (2, 2), "three-sphere": (3, 1),
    }
    assert all(s.normal_orientation for s in scenarios.catalog())


def test_sphere_domain_avoids_poles():
    sc = scenarios.get("sphere")
    assert max(abs(sc.lower[1]), abs(sc.upper[1])) < np.pi / 2


def test_point_evaluations():
    g = ChartGrid((5, 5), (0.1, 0.1), (0.0, 0.0))
    assert np.allclose(scenarios.sample(scenarios.get("sphere"), g).F[0, 0], (1, 0, 0))
    assert np.allclose(scenarios.sample(scenarios.get("torus"), g).F[0, 0], (3, 0, 0))
    p = scenarios.sample(scenarios.get("plane"), g)
    assert np.array_equal(p.F[..., 2], np.zeros((5, 5)))


def test_domain_exceeded():
    sc = scenarios.get("sphere")
    g = ChartGrid((5, 5), (1.0, 0.1), (-1.0, 0.0))
    with pytest.raises(DomainExceeded):
        scenarios.sample(sc, g)
    with pytest.raises(DomainExceeded):
        scenarios.sample(scenarios.get("three-sphere"), ChartGrid((5, 5), (0.1, 0.1), (0.0, 0.0)))


def test_unknown_and_overrides():
    with pytest.raises(KeyError):
        scenarios.get("klein-bottle")
    with pytest.raises(KeyError):
        scenarios.get("sphere", height=2.0)
    sc = scenarios.get("sphere", radius=2.0, lower=(-0.5, -0.5), upper=(0.5, 0.5))
    p = scenarios.sample(sc, sc.grid(9))
    assert np.allclose(np.linalg.norm(p.F, axis=-1), 2.0)
    assert p.grid.origin == (-0.5, -0.5)


@pytest.mark.parametrize("name", sorted(scenarios.CATALOG))
def test_jets_match_finite_differences(name):
    errs = []
    for N in (17, 33):
        sc = scenarios.get(name)
        p = scenarios.sample(sc, sc.grid(N))
        e1 = np.abs(gradient(p.F, p.grid) - p.dF).max()
        e2 = np.abs(hessian(p.F, p.grid) - p.d2F).max()
        errs.append((e1, e2))
    for k in range(2):
        lo, hi = errs[1][k], errs[0][k]
        assert lo <= max(hi / 3, 1e-10)


@pytest.mark.parametrize("name", ["plane", "sphere", "cylinder", "clifford-torus", "three-sphere"])
def test_analytic_metric_matches_pipeline(name):
    sc = scenarios.get(name)
    g = sc.grid(9)
    p = scenarios.sample(sc, g)
    assert np.allclose(induced_metric(p), scenarios.analytic_metric(sc, g), atol=1e-13)


def test_scenarios_without_oracles():
    sc = scenarios.get("torus")
    assert scenarios.analytic_metric(sc, sc.grid(5)) is None
    assert scenarios.analytic_second_form(sc, sc.grid(5)) is None
