"""Adapted frames, induced metric, second fundamental form and connection forms of a patch."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import RankDeficient
from .grid import ChartGrid, gradient, hessian, sweep_batches

RANK_TOL = 1e-8


@dataclass(frozen=True)
class ImmersionPatch:
    """Ambient positions ``F`` on a chart grid, optionally with exact jets.

    ``dF[..., k, :]`` is ``d_k F`` and ``d2F[..., k, l, :]`` is ``d_k d_l F``.
    Missing jets are replaced by second-order finite differences.
    """

    grid: ChartGrid
    F: np.ndarray
    dF: np.ndarray | None = None
    d2F: np.ndarray | None = None
    name: str = "sampled"

    def __post_init__(self):
        if self.F.shape[:-1] != self.grid.shape:
            raise ValueError(f"F has shape {self.F.shape}, grid is {self.grid.shape}")
        if self.d < self.n:
            raise ValueError("ambient dimension must be at least the chart dimension")

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def d(self) -> int:
        return self.F.shape[-1]

    @property
    def m(self) -> int:
        return self.d - self.n

    @property
    def analytic(self) -> bool:
        return self.dF is not None

    def first_derivatives(self) -> np.ndarray:
        return self.dF if self.dF is not None else gradient(self.F, self.grid)

    def second_derivatives(self) -> np.ndarray:
        return self.d2F if self.d2F is not None else hessian(self.F, self.grid)


@dataclass(frozen=True)
class AdaptedFrame:
    """Orthonormal ambient frame per node; ``E[..., :, a]`` is the a-th frame vector.

    Columns ``0..n-1`` span the tangent image, the rest are normals.
    ``chart[..., k, i] = <d_k F, E_i>`` expands each chart direction in the
    tangent frame; it is the intrinsic data the one-form construction needs.
    """

    grid: ChartGrid
    n: int
    E: np.ndarray
    chart: np.ndarray | None = field(default=None, repr=False)

    @property
    def d(self) -> int:
        return self.E.shape[-1]

    @property
    def m(self) -> int:
        return self.d - self.n

    @property
    def tangent(self) -> np.ndarray:
        return self.E[..., :, : self.n]

    @property
    def normal(self) -> np.ndarray:
        return self.E[..., :, self.n:]

    def orthonormality_error(self) -> float:
        gram = np.swapaxes(self.E, -1, -2) @ self.E
        return float(np.abs(gram - np.eye(self.d)).max())


@dataclass(frozen=True)
class SecondFundamentalFormField:
    """``B[..., a, i, j]``: normal component ``a`` of ``B(E_i, E_j)`` in frame indices."""

    grid: ChartGrid
    B: np.ndarray

    def chart_components(self, chart_frame: np.ndarray) -> np.ndarray:
        """``B(d_k, E_i)`` as ``out[..., k, a, i]`` given ``chart_frame[..., k, i] = <d_k F, E_i>``."""
        return np.einsum("...kj,...aji->...kai", chart_frame, self.B)


@dataclass(frozen=True)
class ConnectionFormField:
    """``omega[..., k, a, b] = <d_k E_a, E_b>``, antisymmetric in ``(a, b)``."""

    grid: ChartGrid
    n: int
    omega: np.ndarray = field(repr=False)

    @property
    def d(self) -> int:
        return self.omega.shape[-1]

    def blocks(self, which: str) -> np.ndarray:
        """Keep one block of omega: ``"adapted"`` (tangent and normal diagonal blocks) or ``"mixed"``."""
        n, d = self.n, self.d
        mask = np.zeros((d, d), dtype=bool)
        if which == "adapted":
            mask[:n, :n] = True
            mask[n:, n:] = True
        elif which == "mixed":
            mask[:n, n:] = True
            mask[n:, :n] = True
        else:
            raise ValueError(which)
        return np.where(mask, self.omega, 0.0)


def _rank_check(dF: np.ndarray, grid: ChartGrid):
    sv = np.linalg.svd(dF, compute_uv=False)
    smallest = sv[..., -1]
    bad = smallest <= RANK_TOL
    if np.any(bad):
        node = tuple(int(i) for i in np.argwhere(bad)[0])
        raise RankDeficient(f"differential has rank < {grid.n} at node {node}", node=node)


def _gram_schmidt(vectors: np.ndarray) -> np.ndarray:
    """Orthonormalize the rows of ``vectors[..., r, :]`` in order."""
    out = np.empty_like(vectors)
    for r in range(vectors.shape[-2]):
        v = vectors[..., r, :].copy()
        for q in range(r):
            v -= np.sum(v * out[..., q, :], axis=-1, keepdims=True) * out[..., q, :]
        out[..., r, :] = v / np.linalg.norm(v, axis=-1, keepdims=True)
    return out


def _orient(T: np.ndarray, N: np.ndarray) -> np.ndarray:
    flip = np.linalg.det(np.concatenate([T, N], axis=-1)) < 0
    sign = np.ones(N.shape[-1])
    sign[-1] = -1.0
    return np.where(flip[..., None, None], N * sign, N)


def build_adapted_frame(patch: ImmersionPatch) -> AdaptedFrame:
    """Gram-Schmidt tangent frame plus a normal frame carried continuously across the grid.

    The normal block at the first node completes the tangent frame by QR
    against the standard basis.  Every other node projects its sweep parent's
    normal block onto the new normal space and takes the nearest orthonormal
    set (polar factor).  The last normal is flipped where needed so that the
    full frame is positively oriented.
    """
    grid, n, d = patch.grid, patch.n, patch.d
    dF = patch.first_derivatives()
    _rank_check(dF, grid)
    T = np.swapaxes(_gram_schmidt(dF), -1, -2)  # columns are tangent vectors
    if d == n:
        E = T
        flip = np.linalg.det(E) < 0
        if np.any(flip):
            node = tuple(int(i) for i in np.argwhere(flip)[0])
            raise RankDeficient(f"chart is orientation reversing at node {node}", node=node)
        return AdaptedFrame(grid, n, E, np.einsum("...kd,...di->...ki", dF, E))

    N = np.empty(grid.shape + (d, d - n))
    for tgt, src in sweep_batches(grid.shape):
        t = T[tgt]
        if src is None:
            q, _ = np.linalg.qr(np.concatenate([t, np.eye(d)], axis=-1))
            cand = q[:, n:]
        else:
            prev = N[src]
            proj = prev - t @ (np.swapaxes(t, -1, -2) @ prev)
            u, _, vt = np.linalg.svd(proj, full_matrices=False)
            cand = u @ vt
        N[tgt] = _orient(t, cand)
    return AdaptedFrame(grid, n, np.concatenate([T, N], axis=-1), np.einsum("...kd,...di->...ki", dF, T))


def chart_frame(patch: ImmersionPatch, frame: AdaptedFrame) -> np.ndarray:
    """``out[..., k, i] = <d_k F, E_i>``: chart directions expanded in the tangent frame."""
    return np.einsum("...kd,...di->...ki", patch.first_derivatives(), frame.tangent)


def induced_metric(patch: ImmersionPatch) -> np.ndarray:
    """Pullback metric ``g[..., k, l] = <d_k F, d_l F>``."""
    dF = patch.first_derivatives()
    return np.einsum("...kd,...ld->...kl", dF, dF)


def second_fundamental_form(patch: ImmersionPatch, frame: AdaptedFrame) -> SecondFundamentalFormField:
    """Normal parts of second derivatives, re-expressed along the tangent frame directions."""
    c = chart_frame(patch, frame)
    X = np.linalg.inv(c)  # X[..., i, k]: chart components of E_i
    chart_B = np.einsum("...kld,...da->...akl", patch.second_derivatives(), frame.normal)
    B = np.einsum("...ik,...jl,...akl->...aij", X, X, chart_B, optimize=True)
    B = 0.5 * (B + np.swapaxes(B, -1, -2))
    return SecondFundamentalFormField(frame.grid, B)


def connection_forms(patch: ImmersionPatch, frame: AdaptedFrame) -> ConnectionFormField:
    """Finite-difference ``<d_k E_a, E_b>``, projected onto antisymmetric matrices."""
    dE = gradient(frame.E, frame.grid)  # [..., k, :, a]
    omega = np.einsum("...kxa,...xb->...kab", dE, frame.E)
    omega = 0.5 * (omega - np.swapaxes(omega, -1, -2))
    return ConnectionFormField(frame.grid, frame.n, omega)


def normal_leakage(patch: ImmersionPatch, frame: AdaptedFrame) -> float:
    """Largest ``|<d_k F, E_{n+a}>|``."""
    if frame.m == 0:
        return 0.0
    return float(np.abs(np.einsum("...kd,...da->...ka", patch.first_derivatives(), frame.normal)).max())
