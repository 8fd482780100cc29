"""Rectangular chart grids and the finite-difference stencils shared by every module."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import GridMismatch

MIN_SAMPLES = 5


@dataclass(frozen=True)
class ChartGrid:
    """Uniform grid on a chart rectangle; node ``(i_1, ..., i_n)`` sits at ``origin + i * spacing``."""

    extents: tuple[int, ...]
    spacing: tuple[float, ...]
    origin: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "extents", tuple(int(e) for e in self.extents))
        object.__setattr__(self, "spacing", tuple(float(h) for h in self.spacing))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        if not (len(self.extents) == len(self.spacing) == len(self.origin) >= 1):
            raise ValueError("extents, spacing and origin need one entry per chart axis")
        if min(self.extents) < MIN_SAMPLES:
            raise ValueError(f"every axis needs at least {MIN_SAMPLES} samples, got {self.extents}")
        if min(self.spacing) <= 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")

    @classmethod
    def covering(cls, lower: Sequence[float], upper: Sequence[float],
                 extents: Sequence[int]) -> "ChartGrid":
        """Grid whose first and last nodes sit on the rectangle corners."""
        spacing = [(b - a) / (N - 1) for a, b, N in zip(lower, upper, extents)]
        return cls(tuple(extents), tuple(spacing), tuple(lower))

    @property
    def n(self) -> int:
        return len(self.extents)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.extents

    @property
    def size(self) -> int:
        return int(np.prod(self.extents))

    @property
    def h(self) -> float:
        """Largest spacing; the scale used in convergence fits."""
        return max(self.spacing)

    @property
    def upper(self) -> tuple[float, ...]:
        return tuple(o + h * (N - 1) for o, h, N in zip(self.origin, self.spacing, self.extents))

    def axes(self) -> list[np.ndarray]:
        return [o + h * np.arange(N) for o, h, N in zip(self.origin, self.spacing, self.extents)]

    def coords(self) -> np.ndarray:
        """Chart coordinates of every node, shape ``extents + (n,)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def check_same(self, other: "ChartGrid"):
        if self != other:
            raise GridMismatch(f"grid {self} differs from {other}")

    def to_json(self) -> dict:
        return {"extents": list(self.extents), "spacing": list(self.spacing), "origin": list(self.origin)}

    @classmethod
    def from_json(cls, payload: dict) -> "ChartGrid":
        return cls(tuple(payload["extents"]), tuple(payload["spacing"]), tuple(payload["origin"]))


def diff(f: np.ndarray, grid: ChartGrid, axis: int) -> np.ndarray:
    """Second-order derivative along chart ``axis``: central inside, one-sided at the edges.

    ``f`` has the grid axes first; trailing axes are components.
    """
    return np.gradient(f, grid.spacing[axis], axis=axis, edge_order=2)


def gradient(f: np.ndarray, grid: ChartGrid) -> np.ndarray:
    """All chart derivatives stacked on a new axis right after the grid axes."""
    return np.stack([diff(f, grid, k) for k in range(grid.n)], axis=grid.n)


def diff2(f: np.ndarray, grid: ChartGrid, k: int, l: int) -> np.ndarray:
    """Second derivative ``d_k d_l f`` with second-order stencils.

    Pure derivatives use the three-point stencil inside and the four-point
    one-sided stencil at the edges; mixed ones compose :func:`diff`.
    """
    if k != l:
        return diff(diff(f, grid, l), grid, k)
    h = grid.spacing[k]
    f = np.moveaxis(f, k, 0)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / h**2
    out[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h**2
    out[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / h**2
    return np.moveaxis(out, 0, k)


def hessian(f: np.ndarray, grid: ChartGrid) -> np.ndarray:
    """Symmetric stack ``out[..., k, l, :] = d_k d_l f``."""
    n = grid.n
    comp = f.shape[n:]
    out = np.empty(grid.shape + (n, n) + comp, dtype=f.dtype)
    for k in range(n):
        for l in range(k, n):
            val = diff2(f, grid, k, l)
            out[(slice(None),) * n + (k, l)] = val
            out[(slice(None),) * n + (l, k)] = val
    return out


def sweep_batches(shape: Sequence[int]) -> Iterator[tuple[tuple, tuple | None]]:
    """Yield ``(targets, sources)`` index batches covering the grid in lexicographic order.

    Every node except the first has a parent: the node obtained by decrementing
    its last nonzero index.  Nodes in one batch are independent, and every
    source was yielded as a target earlier, so callers may process each batch
    in a vectorized way.  The first batch is the root with ``sources=None``.
    """
    n = len(shape)
    yield (0,) * n, None
    for a in range(n):
        for t in range(1, shape[a]):
            tgt = tuple(slice(None) if b < a else (t if b == a else 0) for b in range(n))
            src = tuple(slice(None) if b < a else (t - 1 if b == a else 0) for b in range(n))
            yield tgt, src


def parent_index(shape: Sequence[int]) -> np.ndarray:
    """Flat index of every node's sweep parent (``-1`` for the root)."""
    idx = np.arange(int(np.prod(shape))).reshape(shape)
    parent = np.full(idx.shape, -1)
    for tgt, src in sweep_batches(shape):
        if src is not None:
            parent[tgt] = idx[src]
    return parent.ravel()
