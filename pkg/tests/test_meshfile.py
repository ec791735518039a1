import numpy as np
import pytest

from qrsim.geometry import MeshError
from qrsim.meshfile import dumps_mesh, load_mesh, loads_mesh, save_mesh


def test_roundtrip_identity(coarse_mesh, tmp_path):
    path = tmp_path / "mesh.txt"
    save_mesh(coarse_mesh, path)
    m2 = load_mesh(path)
    assert np.array_equal(coarse_mesh.tets, m2.tets)
    assert np.allclose(coarse_mesh.nodes, m2.nodes, rtol=1e-8, atol=1e-12)
    assert np.allclose(coarse_mesh.tm, m2.tm, rtol=1e-8, atol=1e-12)
    assert np.array_equal(coarse_mesh.side, m2.side)
    assert np.array_equal(coarse_mesh.surface_tag, m2.surface_tag)
    assert np.array_equal(coarse_mesh.endo_layer, m2.endo_layer)


def test_roundtrip_bit_exact(coarse_mesh):
    """At the serialized precision a reload re-serializes byte-identically."""
    text = dumps_mesh(coarse_mesh)
    assert dumps_mesh(loads_mesh(text)) == text


def _mutate_line(text, match, new):
    lines = text.splitlines()
    for i, line in enumerate(lines):
        if match(i, line):
            lines[i] = new
            return "\n".join(lines) + "\n"
    raise AssertionError("no line matched")


def test_tet_index_out_of_range(coarse_mesh):
    text = dumps_mesh(coarse_mesh)
    n = coarse_mesh.num_nodes
    lines = text.splitlines()
    start = lines.index(f"#tets {coarse_mesh.num_tets}") + 1
    lines[start + 4] = f"0 1 2 {n + 7}"
    with pytest.raises(MeshError, match=r"tets\[4\].*out of range"):
        loads_mesh("\n".join(lines) + "\n")


def test_coordinate_range_error(coarse_mesh):
    text = dumps_mesh(coarse_mesh)
    lines = text.splitlines()
    start = lines.index(f"#coords {coarse_mesh.num_nodes}") + 1
    lines[start + 2] = "1.2 0.5 0.5 LV"
    with pytest.raises(MeshError, match=r"coords\[2\].*tm=1.2"):
        loads_mesh("\n".join(lines) + "\n")


def test_malformed_records(coarse_mesh):
    text = dumps_mesh(coarse_mesh)
    with pytest.raises(MeshError, match="expected '#nodes"):
        loads_mesh("#bogus 3\n" + text.split("\n", 1)[1])
    lines = text.splitlines()
    lines[1] = "1.0 2.0"
    with pytest.raises(MeshError, match=r"nodes\[0\].*expected 3 numbers"):
        loads_mesh("\n".join(lines) + "\n")
    lines = text.splitlines()
    start = lines.index(f"#tags {coarse_mesh.num_nodes}") + 1
    lines[start] = "volcano dense"
    with pytest.raises(MeshError, match=r"tags\[0\].*unknown surface tag"):
        loads_mesh("\n".join(lines) + "\n")


def test_truncated_file(coarse_mesh):
    text = dumps_mesh(coarse_mesh)
    with pytest.raises(MeshError, match="unexpected end of file"):
        loads_mesh("\n".join(text.splitlines()[:20]))
