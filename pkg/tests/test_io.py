import json

import numpy as np
import pytest

from spinc_immersion import io, scenarios
from spinc_immersion.errors import InputError
from spinc_immersion.frames import build_adapted_frame
from spinc_immersion.grid import ChartGrid
from spinc_immersion.spinfield import U1ConnectionField, combine_connections, restricted_parallel_spinor


@pytest.fixture(scope="module")
def sphere_fields():
    sc = scenarios.get("sphere")
    p = scenarios.sample(sc, sc.grid(9))
    phi, A = restricted_parallel_spinor(build_adapted_frame(p))
    return p, phi, A


def test_spinor_round_trip(tmp_path, sphere_fields):
    _, phi, _ = sphere_fields
    path = tmp_path / "phi.json"
    io.write_json(path, io.spinor_to_json(phi))
    back = io.load_spinor(path)
    assert back.grid == phi.grid
    assert np.array_equal(back.values.coeffs, phi.values.coeffs)
    assert np.array_equal(back.chart, phi.chart)


def test_connection_round_trip(tmp_path, rng):
    g = ChartGrid.covering((0, 0), (1, 1), (6, 7))
    a1 = U1ConnectionField(g, rng.standard_normal(g.shape + (2,)))
    a2 = U1ConnectionField(g, rng.standard_normal(g.shape + (2,)))
    A = combine_connections(a1, a2)
    path = tmp_path / "A.json"
    io.write_json(path, io.connection_to_json(A))
    back = io.load_connection(path)
    assert np.array_equal(back.A, A.A)
    assert np.array_equal(back.parts[0], a1.A)


def test_connection_parts_must_add_up(rng):
    g = ChartGrid.covering((0, 0), (1, 1), (6, 6))
    A = combine_connections(U1ConnectionField(g, rng.standard_normal(g.shape + (2,))),
                            U1ConnectionField.zeros(g))
    payload = json.loads(io.dumps(io.connection_to_json(A)))
    payload["parts"][1][0][0] = 1.0
    with pytest.raises(InputError, match="add up"):
        io.connection_from_json(payload)


def test_dumps_deterministic(sphere_fields):
    _, phi, _ = sphere_fields
    a = io.dumps(io.spinor_to_json(phi))
    assert a == io.dumps(io.spinor_to_json(phi))
    assert a.endswith("\n")
    assert list(json.loads(a)) == sorted(json.loads(a))


def test_truncated_json_reports_position(tmp_path, sphere_fields):
    _, phi, _ = sphere_fields
    text = io.dumps(io.spinor_to_json(phi))
    path = tmp_path / "bad.json"
    path.write_text(text[: len(text) // 3])
    with pytest.raises(InputError) as err:
        io.load_spinor(path)
    assert err.value.line is not None and err.value.line > 1
    assert err.value.column is not None
    assert f"line {err.value.line}" in str(err.value)


def test_missing_file():
    with pytest.raises(InputError, match="cannot read"):
        io.read_json("/nonexistent/phi.json")


def test_wrong_kind_and_shape(sphere_fields):
    _, phi, A = sphere_fields
    with pytest.raises(InputError, match="kind"):
        io.spinor_from_json(io.connection_to_json(A))
    payload = json.loads(io.dumps(io.spinor_to_json(phi)))
    payload["coeffs"] = payload["coeffs"][:-1]
    with pytest.raises(InputError, match="shape"):
        io.spinor_from_json(payload)
    payload = json.loads(io.dumps(io.spinor_to_json(phi)))
    del payload["chart"]
    with pytest.raises(InputError, match="chart"):
        io.spinor_from_json(payload)
    payload = json.loads(io.dumps(io.spinor_to_json(phi)))
    payload["n"] = 3
    with pytest.raises(InputError):
        io.spinor_from_json(payload)


def test_non_finite_rejected(sphere_fields):
    _, _, A = sphere_fields
    payload = io._plain(io.connection_to_json(A))
    payload["A"][0][0] = float("nan")
    with pytest.raises(InputError, match="non-finite"):
        io.connection_from_json(payload)


def test_top_level_must_be_object(tmp_path):
    path = tmp_path / "list.json"
    path.write_text("[1, 2]")
    with pytest.raises(InputError):
        io.read_json(path)


def test_obj_structure(tmp_path, sphere_fields):
    p, _, _ = sphere_fields
    path = tmp_path / "s.obj"
    io.write_obj(path, p.F, p.grid)
    lines = path.read_text().splitlines()
    assert sum(l.startswith("v ") for l in lines) == p.grid.size
    assert sum(l.startswith("f ") for l in lines) == 8 * 8
    assert np.array_equal(io.read_obj_vertices(path), p.F.reshape(-1, 3))
    faces = np.array([list(map(int, l.split()[1:])) for l in lines if l.startswith("f ")])
    assert faces.min() == 1 and faces.max() == p.grid.size


def test_obj_drops_extra_coordinates(tmp_path):
    sc = scenarios.get("clifford-torus")
    p = scenarios.sample(sc, sc.grid(6))
    path = tmp_path / "c.obj"
    io.write_obj(path, p.F, p.grid)
    assert "dropped" in path.read_text()
    assert np.array_equal(io.read_obj_vertices(path), p.F.reshape(-1, 4)[:, :3])


def test_ply_structure(tmp_path):
    sc = scenarios.get("clifford-torus")
    p = scenarios.sample(sc, sc.grid(6))
    path = tmp_path / "c.ply"
    io.write_ply(path, p.F, p.grid)
    lines = path.read_text().splitlines()
    end = lines.index("end_header")
    assert "element vertex 36" in lines and "element face 25" in lines
    assert [l.split()[-1] for l in lines if l.startswith("property double")] == ["x", "y", "z", "w"]
    verts = np.array([list(map(float, l.split())) for l in lines[end + 1:end + 37]])
    assert np.array_equal(verts, p.F.reshape(-1, 4))
    assert all(l.startswith("4 ") for l in lines[end + 37:])


def test_grid_quads():
    q = io.grid_quads((3, 4))
    assert q.shape == (6, 4)
    assert list(q[0]) == [0, 4, 5, 1]
    assert io.grid_quads((3, 3, 3)).shape == (0, 4)


def test_csv_row_counts(tmp_path):
    g = ChartGrid.covering((0, 0), (1, 1), (5, 6))
    norms = np.arange(60.0).reshape(5, 6, 2)
    path = tmp_path / "r.csv"
    io.write_residual_csv(path, norms, g)
    rows = path.read_text().splitlines()
    assert rows[0] == "i0,i1,direction,norm"
    assert len(rows) == 1 + 60
    assert rows[-1] == "4,5,1,59.0"
    path = tmp_path / "n.csv"
    io.write_node_csv(path, {"b": np.ones(g.shape), "a": np.zeros(g.shape)}, g)
    rows = path.read_text().splitlines()
    assert rows[0] == "i0,i1,a,b" and len(rows) == 31


def test_bad_obj_vertex(tmp_path):
    path = tmp_path / "x.obj"
    path.write_text("v 1 2 3\nv 1 nope 3\n")
    with pytest.raises(InputError) as err:
        io.read_obj_vertices(path)
    assert err.value.line == 2
