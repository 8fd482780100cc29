"""File formats: JSON field dumps, CSV residual reports, OBJ/PLY meshes.

Field dumps share one layout: a ``grid`` header followed by node arrays in
row-major order (last chart axis fastest).  Spinor nodes use the same
``[[re, im], ...]`` blade-mask coefficient lists as single multivectors.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .clifford import Multivector, Signature
from .errors import InputError
from .grid import ChartGrid
from .spinfield import SpinorField, U1ConnectionField

FORMAT_VERSION = 1


def _plain(obj):
    """numpy scalars and arrays to plain Python for ``json``."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def dumps(payload: dict) -> str:
    """Deterministic JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(_plain(payload), sort_keys=True, indent=2) + "\n"


def write_json(path, payload: dict):
    Path(path).write_text(dumps(payload))


def read_json(path) -> dict:
    """Parse a JSON file, turning decode failures into :class:`InputError` with the position."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: {exc.msg} at offset {exc.pos}", exc.lineno, exc.colno) from None
    if not isinstance(payload, dict):
        raise InputError(f"{path}: top level must be an object")
    return payload


def _require(payload: dict, key: str, where: str):
    try:
        return payload[key]
    except KeyError:
        raise InputError(f"{where}: missing key {key!r}") from None


def _array(value, shape: tuple, where: str, what: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"{where}: {what} is not a numeric array") from None
    if arr.shape != shape:
        raise InputError(f"{where}: {what} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{where}: {what} contains non-finite values")
    return arr


def _grid(payload: dict, where: str) -> ChartGrid:
    header = _require(payload, "grid", where)
    try:
        return ChartGrid.from_json(header)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{where}: bad grid header ({exc})") from None


def _check_kind(payload: dict, kind: str, where: str):
    found = payload.get("kind")
    if found != kind:
        raise InputError(f"{where}: expected kind {kind!r}, found {found!r}")


# --- spinor fields -----------------------------------------------------------

def spinor_to_json(phi: SpinorField) -> dict:
    c = phi.values.coeffs.reshape(-1, phi.sig.size)
    return {
        "kind": "spinor-field",
        "version": FORMAT_VERSION,
        "grid": phi.grid.to_json(),
        "n": phi.sig.n,
        "m": phi.sig.m,
        "coeffs": np.stack([c.real, c.imag], axis=-1),
        "chart": phi.chart.reshape(-1, phi.grid.n, phi.grid.n),
    }


def spinor_from_json(payload: dict, where: str = "spinor") -> SpinorField:
    _check_kind(payload, "spinor-field", where)
    grid = _grid(payload, where)
    try:
        sig = Signature(int(_require(payload, "n", where)), int(_require(payload, "m", where)))
    except (TypeError, ValueError) as exc:
        raise InputError(f"{where}: bad signature ({exc})") from None
    if sig.n != grid.n:
        raise InputError(f"{where}: tangent rank {sig.n} does not match the {grid.n}-dimensional grid")
    pairs = _array(_require(payload, "coeffs", where), (grid.size, sig.size, 2), where, "coeffs")
    chart = _array(_require(payload, "chart", where), (grid.size, grid.n, grid.n), where, "chart")
    values = Multivector(sig, (pairs[..., 0] + 1j * pairs[..., 1]).reshape(grid.shape + (sig.size,)))
    return SpinorField(grid, values, chart.reshape(grid.shape + (grid.n, grid.n)))


# --- U(1) connections --------------------------------------------------------

def connection_to_json(A: U1ConnectionField) -> dict:
    out = {
        "kind": "u1-connection",
        "version": FORMAT_VERSION,
        "grid": A.grid.to_json(),
        "A": A.A.reshape(-1, A.grid.n),
    }
    if A.parts is not None:
        out["parts"] = [p.reshape(-1, A.grid.n) for p in A.parts]
    return out


def connection_from_json(payload: dict, where: str = "connection") -> U1ConnectionField:
    _check_kind(payload, "u1-connection", where)
    grid = _grid(payload, where)
    shape = (grid.size, grid.n)
    A = _array(_require(payload, "A", where), shape, where, "A").reshape(grid.shape + (grid.n,))
    parts = None
    if "parts" in payload:
        raw = payload["parts"]
        if not isinstance(raw, list) or len(raw) != 2:
            raise InputError(f"{where}: parts must hold exactly two arrays")
        parts = tuple(_array(p, shape, where, f"parts[{i}]").reshape(A.shape) for i, p in enumerate(raw))
        if not np.array_equal(parts[0] + parts[1], A):
            raise InputError(f"{where}: parts do not add up to A")
    return U1ConnectionField(grid, A, parts)


def load_spinor(path) -> SpinorField:
    return spinor_from_json(read_json(path), where=str(path))


def load_connection(path) -> U1ConnectionField:
    return connection_from_json(read_json(path), where=str(path))


def immersion_to_json(grid: ChartGrid, F: np.ndarray, **meta) -> dict:
    return {"kind": "immersion", "version": FORMAT_VERSION, "grid": grid.to_json(),
            "F": F.reshape(-1, F.shape[-1]), **meta}


# --- CSV reports ---------------------------------------------------------------

def write_residual_csv(path, norms: np.ndarray, grid: ChartGrid):
    """One row per node and chart direction: node index, direction, residual norm."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"i{a}" for a in range(grid.n)] + ["direction", "norm"])
        for node in np.ndindex(*grid.shape):
            for k in range(grid.n):
                w.writerow([*node, k, repr(float(norms[node + (k,)]))])


def write_node_csv(path, columns: dict[str, np.ndarray], grid: ChartGrid):
    """One row per node with any number of scalar per-node fields."""
    names = sorted(columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"i{a}" for a in range(grid.n)] + names)
        for node in np.ndindex(*grid.shape):
            w.writerow([*node] + [repr(float(columns[c][node])) for c in names])


# --- meshes --------------------------------------------------------------------

def grid_quads(shape: tuple[int, ...]) -> np.ndarray:
    """Quad faces (0-based, counter-clockwise in the chart) of a 2-D grid; empty otherwise."""
    if len(shape) != 2:
        return np.zeros((0, 4), dtype=int)
    idx = np.arange(shape[0] * shape[1]).reshape(shape)
    a, b = idx[:-1, :-1], idx[1:, :-1]
    c, d = idx[1:, 1:], idx[:-1, 1:]
    return np.stack([a, b, c, d], axis=-1).reshape(-1, 4)


def write_obj(path, F: np.ndarray, grid: ChartGrid):
    """Wavefront OBJ.  OBJ vertices are 3-D, so only the first three ambient
    coordinates are written; PLY keeps all of them."""
    pts = F.reshape(-1, F.shape[-1])
    faces = grid_quads(grid.shape)
    with open(path, "w") as fh:
        fh.write(f"# grid {'x'.join(map(str, grid.shape))}, ambient dimension {pts.shape[1]}\n")
        if pts.shape[1] > 3:
            fh.write("# coordinates beyond the third are dropped\n")
        for p in pts:
            xyz = list(p[:3]) + [0.0] * (3 - min(3, len(p)))
            fh.write("v " + " ".join(f"{x:.17g}" for x in xyz) + "\n")
        for f in faces + 1:
            fh.write("f " + " ".join(map(str, f)) + "\n")


def write_ply(path, F: np.ndarray, grid: ChartGrid):
    """ASCII PLY with one float property per ambient coordinate (x, y, z, w, x4, ...)."""
    pts = F.reshape(-1, F.shape[-1])
    names = ["x", "y", "z", "w"] + [f"x{i}" for i in range(4, pts.shape[1])]
    faces = grid_quads(grid.shape)
    lines = ["ply", "format ascii 1.0", f"element vertex {len(pts)}"]
    lines += [f"property double {names[i]}" for i in range(pts.shape[1])]
    lines += [f"element face {len(faces)}", "property list uchar int vertex_indices", "end_header"]
    lines += [" ".join(f"{x:.17g}" for x in p) for p in pts]
    lines += ["4 " + " ".join(map(str, f)) for f in faces]
    Path(path).write_text("\n".join(lines) + "\n")


def read_obj_vertices(path) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if line.startswith("v "):
            try:
                rows.append([float(x) for x in line.split()[1:4]])
            except ValueError:
                raise InputError(f"{path}: bad vertex", lineno, 1) from None
    return np.asarray(rows)
