"""Spinor fields in the adapted trivialization, U(1) connections and the Killing residual.

Spinor values are multivectors (left regular representation): tangent
directions act through generators ``e_1..e_n`` and normal directions through
``e_{n+1}..e_{n+m}``.  U(1) connections are stored as real coefficients
``A(d_k)``; the connection form itself is ``i A``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .clifford import (
    Multivector,
    Signature,
    SpinCElement,
    bivector,
    spin_lift,
    tau,
    unit_defect,
)
from .errors import GridMismatch, LiftDiscontinuity, NotSpinC
from .frames import AdaptedFrame, ConnectionFormField, SecondFundamentalFormField
from .grid import ChartGrid, diff, gradient, sweep_batches

UNIT_TOL = 1e-10
# |<g, g_parent>| below this means neighbouring frames are more than 120 degrees apart
LIFT_AMBIGUITY = 0.5
ARGMAX_RTOL = 1e-9


@dataclass(frozen=True)
class U1ConnectionField:
    """``A[..., k]`` per node and chart direction, optionally split as ``A1 + A2``."""

    grid: ChartGrid
    A: np.ndarray
    parts: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.A.shape != self.grid.shape + (self.grid.n,):
            raise GridMismatch(f"connection shape {self.A.shape} does not fit grid {self.grid.shape}")
        if not np.all(np.isfinite(self.A)):
            raise ValueError("connection coefficients must be finite")

    @classmethod
    def zeros(cls, grid: ChartGrid) -> "U1ConnectionField":
        return cls(grid, np.zeros(grid.shape + (grid.n,)))


@dataclass(frozen=True)
class SpinorField:
    """Multivector representative per node, plus the chart directions in the tangent frame."""

    grid: ChartGrid
    values: Multivector
    chart: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.values.batch_shape != self.grid.shape:
            raise GridMismatch(f"spinor batch {self.values.batch_shape} does not fit grid {self.grid.shape}")
        if self.chart.shape != self.grid.shape + (self.grid.n, self.grid.n):
            raise GridMismatch(f"chart-frame array has shape {self.chart.shape}")

    @property
    def sig(self) -> Signature:
        return self.values.sig

    def unit_defect(self) -> np.ndarray:
        return unit_defect(self.values)

    def check_unit(self, tol: float = UNIT_TOL):
        """Raise :class:`NotSpinC` unless ``tau(phi) phi = 1`` at every node."""
        defect = self.unit_defect()
        worst = float(defect.max())
        if worst > tol:
            node = tuple(int(i) for i in np.unravel_index(int(np.argmax(defect)), defect.shape))
            raise NotSpinC(f"spinor leaves the unit Spin^C fiber at node {node}: defect {worst:.3e}")

    def with_values(self, values: Multivector) -> "SpinorField":
        return SpinorField(self.grid, values, self.chart)


@dataclass(frozen=True)
class KillingResidual:
    """Residual multivectors ``values[..., k]`` with their norms and the worst node."""

    values: Multivector
    norms: np.ndarray

    @property
    def max(self) -> float:
        return float(self.norms.max())

    @property
    def per_node(self) -> np.ndarray:
        return self.norms.max(axis=-1)

    @property
    def argmax(self) -> tuple[int, ...]:
        # first node (row-major) within rounding of the max, so symmetric ties are stable
        per_node = self.per_node
        top = per_node.max()
        flat = int(np.argmax(per_node.ravel() >= top * (1 - ARGMAX_RTOL)))
        return tuple(int(i) for i in np.unravel_index(flat, per_node.shape))


def _same_grid(*grids: ChartGrid):
    first = grids[0]
    for g in grids[1:]:
        if g != first:
            raise GridMismatch(f"grid {g} differs from {first}")


def combine_connections(A1: U1ConnectionField, A2: U1ConnectionField) -> U1ConnectionField:
    """Connection on the product circle bundle: pointwise ``A1 + A2``, keeping both parts."""
    _same_grid(A1.grid, A2.grid)
    return U1ConnectionField(A1.grid, A1.A + A2.A, (A1.A, A2.A))


def _derivative(phi: SpinorField, k: int) -> Multivector:
    return Multivector._wrap(phi.sig, diff(phi.values.coeffs, phi.grid, k))


def _rotation_term(omega: np.ndarray, sig: Signature) -> Multivector:
    # 1/2 sum_{a<b} omega_ab e_a e_b
    return bivector(sig, 0.5 * omega)


def _phase_term(A: U1ConnectionField | None, k: int, phi: SpinorField) -> Multivector:
    if A is None:
        return Multivector.zeros(phi.sig, phi.grid.shape)
    return phi.values * (0.5j * A.A[..., k])


def ambient_covariant_derivative(phi: SpinorField, omega: ConnectionFormField,
                                 A: U1ConnectionField | None, k: int) -> Multivector:
    """``d_k phi + 1/2 sum_{a<b} omega_ab(d_k) e_a e_b phi + 1/2 i A(d_k) phi`` with the full omega."""
    _same_grid(phi.grid, omega.grid, *([A.grid] if A is not None else []))
    rot = _rotation_term(omega.omega[..., k, :, :], phi.sig)
    return _derivative(phi, k) + rot * phi.values + _phase_term(A, k, phi)


def adapted_covariant_derivative(phi: SpinorField, omega: ConnectionFormField,
                                 A: U1ConnectionField | None, k: int) -> Multivector:
    """Same as the ambient derivative but only the tangent-tangent and normal-normal blocks of omega act."""
    _same_grid(phi.grid, omega.grid, *([A.grid] if A is not None else []))
    rot = _rotation_term(omega.blocks("adapted")[..., k, :, :], phi.sig)
    return _derivative(phi, k) + rot * phi.values + _phase_term(A, k, phi)


def second_form_term(phi: SpinorField, B: SecondFundamentalFormField, k: int) -> Multivector:
    """``1/2 sum_i e_i B(d_k, e_i) phi`` with B acting through the normal generators."""
    _same_grid(phi.grid, B.grid)
    n, d = phi.grid.n, phi.sig.d
    Bk = B.chart_components(phi.chart)[..., k, :, :]  # [..., a, i]
    coeffs = np.zeros(phi.grid.shape + (d, d))
    coeffs[..., :n, n:] = np.swapaxes(Bk, -1, -2)
    return bivector(phi.sig, 0.5 * coeffs) * phi.values


def phase_covariant_derivative(phi: SpinorField, A: U1ConnectionField | None, k: int) -> Multivector:
    """Discrete ``d_k phi - 1/2 i A(d_k) phi`` built from phase-transported neighbours.

    Along each grid line in direction ``k`` the spinor is rotated by
    ``exp(-i/2 P)``, with ``P`` the trapezoid primitive of ``A(d_k)``,
    differentiated with the usual stencil and rotated back.  For ``A = 0`` this
    is the plain stencil; for ``A -> A + 2 d theta`` it reproduces the phase
    of ``exp(i theta) phi`` node by node instead of only to O(h^2).
    """
    if A is None or not np.any(A.A[..., k]):
        return _derivative(phi, k)
    P = cumulative_trapezoid(A.A[..., k], dx=phi.grid.spacing[k], axis=k, initial=0)
    w = np.exp(-0.5j * P)[..., None]
    return Multivector._wrap(phi.sig, np.conj(w) * diff(w * phi.values.coeffs, phi.grid, k))


def killing_residual(phi: SpinorField, B: SecondFundamentalFormField, omega: ConnectionFormField,
                     A: U1ConnectionField) -> KillingResidual:
    """Defect of the generalized Killing equation in every chart direction.

    Levi-Civita blocks of omega act as in :func:`adapted_covariant_derivative`;
    the U(1) potential enters once, as the ``-1/2 i A phi`` source, folded into
    :func:`phase_covariant_derivative`.  A gauge change
    ``phi -> exp(i theta) phi, A -> A + 2 d theta`` multiplies the residual by
    the same phase.
    """
    _same_grid(phi.grid, B.grid, omega.grid, A.grid)
    parts = []
    for k in range(phi.grid.n):
        rot = _rotation_term(omega.blocks("adapted")[..., k, :, :], phi.sig)
        r = phase_covariant_derivative(phi, A, k) + rot * phi.values + second_form_term(phi, B, k)
        parts.append(r.coeffs)
    values = Multivector._wrap(phi.sig, np.stack(parts, axis=phi.grid.n))
    return KillingResidual(values, values.norm())


def _lift_frames(frame: AdaptedFrame, sig: Signature) -> Multivector:
    c = spin_lift(frame.E, sig=sig).value.coeffs
    nodes = np.indices(frame.grid.shape)
    sign = np.ones(frame.grid.shape)
    for tgt, src in sweep_batches(frame.grid.shape):
        if src is None:
            continue
        overlap = np.atleast_1d(np.sum((np.conj(c[src]) * c[tgt]).real, axis=-1))
        bad = np.abs(overlap) < LIFT_AMBIGUITY
        if np.any(bad):
            first = int(np.argmax(bad))
            node = tuple(int(np.atleast_1d(ax[tgt])[first]) for ax in nodes)
            raise LiftDiscontinuity(
                f"frame jumps between node {node} and its sweep parent; lift overlap {overlap[first]:.3f}",
                node=node,
            )
        sign[tgt] = sign[src] * np.sign(overlap).reshape(np.shape(sign[tgt]))
    return Multivector._wrap(sig, c * sign[..., None])


def restricted_parallel_spinor(frame: AdaptedFrame, phi0: SpinCElement | None = None
                               ) -> tuple[SpinorField, U1ConnectionField]:
    """Constant ambient spinor ``phi0`` written in the adapted frame: ``g(x)^{-1} phi0``.

    ``g(x)`` lifts the frame rotation, with signs chained along the grid sweep
    so the field is continuous.  The returned connection is the zero potential
    of the constant ambient gauge.
    """
    sig = Signature(frame.n, frame.m)
    g = _lift_frames(frame, sig)
    inv = tau(g)
    values = inv if phi0 is None else inv * phi0.value
    return SpinorField(frame.grid, values, frame.chart), U1ConnectionField.zeros(frame.grid)


def gauge_transform(phi: SpinorField, A: U1ConnectionField, theta: np.ndarray
                    ) -> tuple[SpinorField, U1ConnectionField]:
    """``phi -> exp(i theta) phi`` and ``A -> A + 2 d theta`` (same stencil as everywhere else)."""
    _same_grid(phi.grid, A.grid)
    theta = np.broadcast_to(np.asarray(theta, dtype=float), phi.grid.shape)
    # differencing theta - theta(root) keeps constant gauges exact (no stencil rounding)
    shift = 2.0 * gradient(theta - theta.flat[0], phi.grid)
    if A.parts is not None:
        a1, a2 = A.parts[0] + shift, A.parts[1]
        new_A = U1ConnectionField(A.grid, a1 + a2, (a1, a2))
    else:
        new_A = U1ConnectionField(A.grid, A.A + shift)
    return phi.with_values(phi.values * np.exp(1j * theta)), new_A
