"""The vector-valued one-form built from a spinor, its integration, and the validators."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .clifford import Multivector, extract_real_vector, tau, vector_embed
from .errors import DegenerateConfiguration, NotClosedEnough
from .frames import ConnectionFormField, SecondFundamentalFormField
from .grid import ChartGrid, diff, gradient, hessian
from .spinfield import SpinorField

REAL_TOL = 1e-9
CLOSED_THRESHOLD = 1e-2


@dataclass(frozen=True)
class OneFormField:
    """``xi[..., k, :]`` is the ambient vector ``xi(d_k)`` at each node."""

    grid: ChartGrid
    xi: np.ndarray = field(repr=False)

    @property
    def d(self) -> int:
        return self.xi.shape[-1]


@dataclass(frozen=True)
class ReconstructedImmersion:
    grid: ChartGrid
    F: np.ndarray = field(repr=False)
    basepoint: tuple[int, ...]
    origin: np.ndarray
    scheme: str
    path_discrepancy: float
    closedness: float


@dataclass(frozen=True)
class FieldReport:
    """Maximum deviation of a validator plus the per-node values behind it."""

    name: str
    max_error: float
    per_node: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class Alignment:
    rotation: np.ndarray
    translation: np.ndarray
    rms: float


def transport(phi: SpinorField, frame_vectors, tol: float = REAL_TOL) -> np.ndarray:
    """``tau(phi) [v] phi`` for vectors given in adapted-frame coordinates.

    ``frame_vectors`` has shape ``grid + (..., d)`` or just ``(..., d)``; the
    result is in ambient coordinates with the same shape.
    """
    g = phi.grid.shape
    v = np.asarray(frame_vectors, dtype=float)
    if v.shape[: len(g)] != g:
        v = np.broadcast_to(v, g + v.shape)
    extra = v.ndim - len(g) - 1
    c = phi.values.coeffs.reshape(g + (1,) * extra + (phi.sig.size,))
    p = Multivector._wrap(phi.sig, c)
    out = tau(p) * vector_embed(phi.sig, v) * p
    return extract_real_vector(out, tol=tol)


def build_one_form(phi: SpinorField, tol: float = REAL_TOL, unit_tol: float = REAL_TOL) -> OneFormField:
    """``xi(d_k) = tau(phi) [d_k] phi`` with ``d_k`` written in the tangent generators.

    Raises:
        NotSpinC: the spinor is off the unit fiber.
        NotARealVector: a value fails the real-vector check.
    """
    phi.check_unit(unit_tol)
    n, d = phi.grid.n, phi.sig.d
    directions = np.zeros(phi.grid.shape + (n, d))
    directions[..., :n] = phi.chart
    return OneFormField(phi.grid, transport(phi, directions, tol))


def normal_images(phi: SpinorField, tol: float = REAL_TOL) -> np.ndarray:
    """Ambient images ``out[..., a, :]`` of the normal frame vectors ``e_{n+a}``."""
    n, d = phi.grid.n, phi.sig.d
    return transport(phi, np.eye(d)[n:], tol)


def closedness_residual(xi: OneFormField) -> np.ndarray:
    """Per node, the largest ``|d_k xi(d_l) - d_l xi(d_k)|`` over direction pairs."""
    n = xi.grid.n
    out = np.zeros(xi.grid.shape)
    for k in range(n):
        for l in range(k + 1, n):
            curl = diff(xi.xi[..., l, :], xi.grid, k) - diff(xi.xi[..., k, :], xi.grid, l)
            out = np.maximum(out, np.linalg.norm(curl, axis=-1))
    return out


def _staircase(xi: np.ndarray, grid: ChartGrid, base: tuple[int, ...], order) -> np.ndarray:
    n = grid.n
    total = np.zeros(grid.shape + (xi.shape[-1],))
    for step, axis in enumerate(order):
        sl = [slice(None)] * n
        for fixed in order[step + 1:]:
            sl[fixed] = slice(base[fixed], base[fixed] + 1)
        y = xi[tuple(sl) + (axis, slice(None))]
        cum = cumulative_trapezoid(y, dx=grid.spacing[axis], axis=axis, initial=0)
        cum = cum - np.take(cum, [base[axis]], axis=axis)
        total = total + cum
    return total


def integrate_one_form(xi: OneFormField, basepoint=None, origin=None,
                       threshold: float = CLOSED_THRESHOLD, strict: bool = True) -> ReconstructedImmersion:
    """Integrate ``xi`` by trapezoid sums along axis-ordered staircase paths.

    Both the forward and the reversed axis order are integrated and averaged;
    their largest disagreement is kept as ``path_discrepancy``.

    Raises:
        NotClosedEnough: the closedness residual exceeds ``threshold`` and
            ``strict`` is set (otherwise a warning is emitted).
    """
    grid = xi.grid
    closed = float(closedness_residual(xi).max())
    if closed > threshold:
        msg = f"closedness residual {closed:.3e} exceeds threshold {threshold:g}"
        if strict:
            raise NotClosedEnough(msg, residual=closed)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    base = tuple(basepoint) if basepoint is not None else (0,) * grid.n
    origin = np.zeros(xi.d) if origin is None else np.asarray(origin, dtype=float)
    forward = _staircase(xi.xi, grid, base, tuple(range(grid.n)))
    backward = _staircase(xi.xi, grid, base, tuple(reversed(range(grid.n))))
    F = origin + 0.5 * (forward + backward)
    gap = float(np.linalg.norm(forward - backward, axis=-1).max())
    return ReconstructedImmersion(grid, F, base, origin, "staircase-trapezoid-avg2", gap, closed)


def pullback_metric(F: np.ndarray, grid: ChartGrid) -> np.ndarray:
    dF = gradient(F, grid)
    return np.einsum("...kd,...ld->...kl", dF, dF)


def verify_isometry(rec: ReconstructedImmersion, g: np.ndarray) -> FieldReport:
    """Compare the finite-difference pullback metric of ``rec.F`` with ``g``."""
    err = np.abs(pullback_metric(rec.F, rec.grid) - g).max(axis=(-1, -2))
    return FieldReport("metric", float(err.max()), err)


def _normal_projector(F: np.ndarray, grid: ChartGrid) -> np.ndarray:
    dF = gradient(F, grid)  # [..., k, d]
    q, _ = np.linalg.qr(np.swapaxes(dF, -1, -2))  # tangent basis in columns
    return np.eye(F.shape[-1]) - q @ np.swapaxes(q, -1, -2)


def verify_second_fundamental_form(rec: ReconstructedImmersion, phi: SpinorField,
                                   B: SecondFundamentalFormField) -> FieldReport:
    """Normal part of the reconstructed second derivatives against ``xi`` applied to ``B``.

    Left side: ``P_perp d_k d_l F_rec``.  Right side: ``sum_a B^a(d_k, d_l) xi(e_{n+a})``.
    """
    P = _normal_projector(rec.F, rec.grid)
    lhs = np.einsum("...xy,...kly->...klx", P, hessian(rec.F, rec.grid))
    c = phi.chart
    B_chart = np.einsum("...ki,...lj,...aij->...kla", c, c, B.B, optimize=True)
    rhs = np.einsum("...kla,...ax->...klx", B_chart, normal_images(phi))
    err = np.linalg.norm(lhs - rhs, axis=-1).max(axis=(-1, -2))
    return FieldReport("second_fundamental_form", float(err.max()), err)


def verify_normal_connection(rec: ReconstructedImmersion, phi: SpinorField,
                             omega: ConnectionFormField) -> FieldReport:
    """Transported normal connection against the normal derivative of the transported normals."""
    n = phi.grid.n
    N = normal_images(phi)  # [..., a, x]
    P = _normal_projector(rec.F, rec.grid)
    dN = gradient(N, rec.grid)  # [..., k, a, x]
    rhs = np.einsum("...xy,...kay->...kax", P, dN)
    nn = omega.omega[..., n:, n:]  # [..., k, a, b]
    lhs = np.einsum("...kab,...bx->...kax", nn, N)
    err = np.linalg.norm(lhs - rhs, axis=-1).max(axis=(-1, -2))
    return FieldReport("normal_connection", float(err.max()), err)


def rigid_align(F_rec, F_ref) -> Alignment:
    """Least-squares proper rigid motion taking ``F_rec`` onto ``F_ref`` (Kabsch).

    Point arrays may carry grid axes; the last axis is the ambient dimension.
    """
    P = np.asarray(F_rec, dtype=float)
    Q = np.asarray(F_ref, dtype=float)
    if P.shape != Q.shape:
        raise ValueError(f"point sets differ in shape: {P.shape} vs {Q.shape}")
    d = P.shape[-1]
    P = P.reshape(-1, d)
    Q = Q.reshape(-1, d)
    if P.shape[0] < d:
        raise DegenerateConfiguration(f"need at least {d} points, got {P.shape[0]}")
    pc, qc = P.mean(axis=0), Q.mean(axis=0)
    H = (P - pc).T @ (Q - qc)
    u, s, vt = np.linalg.svd(H)
    if s[0] == 0 or (d > 1 and s[d - 2] <= 1e-12 * s[0]):
        raise DegenerateConfiguration(f"cross-covariance rank too low (singular values {s})")
    D = np.eye(d)
    D[-1, -1] = np.sign(np.linalg.det(vt.T @ u.T)) or 1.0
    R = vt.T @ D @ u.T
    t = qc - R @ pc
    resid = P @ R.T + t - Q
    rms = float(np.sqrt(np.mean(np.sum(resid**2, axis=-1))))
    return Alignment(R, t, rms)
