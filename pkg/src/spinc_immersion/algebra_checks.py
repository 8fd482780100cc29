"""Seeded property suites for the Clifford layer and the spin lift.

Each suite returns a list of :class:`CheckResult` in a fixed order; the first
failing entry is what the CLI names.  Random multivectors are drawn with unit
coefficient norm so absolute tolerances are meaningful across dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .clifford import (
    Multivector,
    Signature,
    adjoint_matrix,
    blade_grades,
    generators,
    random_multivector,
    random_rotation,
    random_spinc,
    spin_lift,
    tau,
    unit_defect,
    vector_embed,
)

ALGEBRA_DIMS = (2, 3, 4, 5, 6)


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_error: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.max_error <= self.tol)

    def to_json(self) -> dict:
        return {"name": self.name, "max_error": self.max_error, "tol": self.tol, "passed": self.passed}


def broken_tau(a: Multivector) -> Multivector:
    """Fault-injection stand-in: grade sign and conjugation without the blade reversal."""
    sign = np.where(blade_grades(a.sig.d) % 2, -1.0, 1.0)
    return Multivector._wrap(a.sig, np.conj(a.coeffs) * sign)


def _err(x: Multivector, y: Multivector) -> float:
    return float(np.abs(x.coeffs - y.coeffs).max())


def run_algebra_suite(seed: int = 42, trials: int = 1000, dims: Sequence[int] = ALGEBRA_DIMS,
                      tol: float = 1e-12, tau_fn: Callable[[Multivector], Multivector] = tau
                      ) -> list[CheckResult]:
    """Identities of the product, tau and the pairing on ``trials`` random samples per dimension."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    worst: dict[str, float] = {}

    def record(name, value):
        worst[name] = max(worst.get(name, 0.0), float(value))

    def pairing(x1, x2):
        return tau_fn(x2) * x1

    for d in dims:
        sig = Signature(max(1, d - 1), d - max(1, d - 1))
        batch = (trials,)
        a, b, c = (random_multivector(sig, rng, batch) for _ in range(3))
        gens = generators(sig)
        one = Multivector.scalar(sig)
        rel = 0.0
        for i, ei in enumerate(gens):
            for j, ej in enumerate(gens):
                target = one * (-2.0 if i == j else 0.0)
                rel = max(rel, _err(ei * ej + ej * ei, target))
        record("generator relations", rel)
        record("associativity", _err((a * b) * c, a * (b * c)))
        record("tau anti-automorphism", _err(tau_fn(a * b), tau_fn(b) * tau_fn(a)))
        record("tau involution", _err(tau_fn(tau_fn(a)), a))
        v = rng.standard_normal(batch + (d,))
        X = vector_embed(sig, v / np.linalg.norm(v, axis=-1, keepdims=True))
        record("vector skew-adjointness", _err(pairing(X * a, b), -pairing(a, X * b)))
        record("pairing symmetry", _err(tau_fn(pairing(a, b)), pairing(b, a)))
        g = random_spinc(sig, rng, batch).value
        record("Spin^C invariance", _err(pairing(g * a, g * b), pairing(a, b)))
        record("unit invariant", float(unit_defect(g).max()))

    return [CheckResult(name, worst[name], tol) for name in (
        "generator relations", "associativity", "tau anti-automorphism", "tau involution",
        "vector skew-adjointness", "pairing symmetry", "Spin^C invariance", "unit invariant")]


def _overlap(x: Multivector, y: Multivector) -> np.ndarray:
    return np.sum((np.conj(x.coeffs) * y.coeffs).real, axis=-1)


def _chain(path: np.ndarray, sig: Signature) -> tuple[list[Multivector], int, float]:
    """Lift a rotation path with neighbour hints; return lifts, sign flips and worst step."""
    lifts = [spin_lift(path[0], sig=sig)]
    flips, step = 0, 0.0
    for R in path[1:]:
        hint = lifts[-1]
        g = spin_lift(R, hint=hint, sig=sig)
        flips += int(_overlap(hint.value, g.value) <= 0)
        step = max(step, float(np.linalg.norm(g.value.coeffs - hint.value.coeffs)))
        lifts.append(g)
    return [x.value for x in lifts], flips, step


def run_spin_lift_suite(seed: int = 42, trials: int = 500, dims: Sequence[int] = ALGEBRA_DIMS,
                        tol: float = 1e-9, path_steps: int = 200) -> list[CheckResult]:
    """Round trip ``Ad(spin_lift(R)) = R``, hint continuity along smooth paths, the 2 pi sign change."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    per_dim = np.full(len(dims), trials // len(dims))
    per_dim[: trials % len(dims)] += 1
    roundtrip = unit = 0.0
    flips, step = 0, 0.0
    for d, count in zip(dims, per_dim):
        sig = Signature(d, 0)
        R = random_rotation(d, rng, (int(count),))
        g = spin_lift(R, sig=sig)
        roundtrip = max(roundtrip, float(np.abs(adjoint_matrix(g) - R).max()))
        unit = max(unit, float(unit_defect(g.value).max()))
        # smooth path exp(t K) R0 through a random start
        K = rng.standard_normal((d, d))
        K = K - K.T
        K *= 2 * np.pi / np.linalg.norm(K, 2)
        ts = np.linspace(0.0, 1.0, path_steps)
        path = np.stack([expm(t * K) for t in ts]) @ R[0]
        _, f, s = _chain(path, sig)
        flips += f
        step = max(step, s)

    # a full turn in one plane ends at -g: the lift is a genuine double cover
    sig = Signature(3, 0)
    ts = np.linspace(0.0, 2 * np.pi, path_steps)
    c, s = np.cos(ts), np.sin(ts)
    path = np.zeros((path_steps, 3, 3))
    path[:, 0, 0], path[:, 0, 1], path[:, 1, 0], path[:, 1, 1], path[:, 2, 2] = c, -s, s, c, 1.0
    lifts, f, _ = _chain(path, sig)
    flips += f
    loop = float(np.abs(lifts[-1].coeffs + lifts[0].coeffs).max())

    # step size of a continuous chain is O(angle per step); a sign flip would show up as ~2
    step_tol = 4 * np.pi / path_steps
    return [
        CheckResult("spin lift round trip", roundtrip, tol),
        CheckResult("spin lift unit invariant", unit, 1e-12),
        CheckResult("hint continuity (sign flips)", float(flips), 0.0),
        CheckResult("hint continuity (step size)", step, step_tol),
        CheckResult("full turn lifts to -g", loop, tol),
    ]
