import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdivstokes.mesh import (MeshError, build_topology, generate_structured, read_mesh,
                             shape_metrics, write_mesh)


@pytest.mark.parametrize("n, V, F, E, E_int, V_int", [
    (1, 4, 2, 5, 1, 0),
    (2, 9, 8, 16, 8, 1),
    (4, 25, 32, 56, 40, 9),
])
def test_structured_counts(n, V, F, E, E_int, V_int):
    m = generate_structured(n)
    assert (m.n_vertices, m.n_triangles, m.n_edges) == (V, F, E)
    assert np.count_nonzero(~m.edge_boundary) == E_int
    assert np.count_nonzero(~m.vertex_boundary) == V_int
    # Euler relation for a disc, and the edge count from the boundary
    assert V - E + F == 1
    assert E == (3 * F + np.count_nonzero(m.edge_boundary)) // 2


@pytest.mark.parametrize("n", [1, 2, 3, 8])
def test_structured_invariants(n):
    m = generate_structured(n)
    assert m.h == pytest.approx(np.sqrt(2) / n, rel=1e-15)
    assert abs(m.areas.sum() - 1.0) < 1e-14
    assert np.all(m.areas > 0)
    p = m.coords()
    cross = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
             - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    assert np.all(cross > 0)
    assert np.all(m.edges[:, 0] < m.edges[:, 1])
    owners = np.bincount(m.tri_edges.ravel(), minlength=m.n_edges)
    np.testing.assert_array_equal(owners, np.where(m.edge_boundary, 1, 2))
    # opposite signs across every interior edge
    et = m.edge_triangles()
    inner = ~m.edge_boundary
    assert np.all(et[inner] >= 0)
    s = np.zeros((m.n_edges, 2), dtype=int)
    for t, (es, ss) in enumerate(zip(m.tri_edges, m.tri_signs)):
        for e, sg in zip(es, ss):
            s[e, 0 if sg > 0 else 1] = sg
    np.testing.assert_array_equal(s[inner].prod(axis=1), -1)


def test_normals_are_clockwise_rotation():
    m = generate_structured(3)
    d = m.vertices[m.edges[:, 1]] - m.vertices[m.edges[:, 0]]
    d /= np.linalg.norm(d, axis=1)[:, None]
    np.testing.assert_allclose(m.normals, np.stack([d[:, 1], -d[:, 0]], axis=1))


def test_sign_means_outward_normal():
    m = generate_structured(4)
    centroid = m.coords().mean(axis=1)
    mid = m.vertices[m.edges].mean(axis=1)
    out = np.einsum("fkd,fkd->fk", m.normals[m.tri_edges], mid[m.tri_edges] - centroid[:, None])
    np.testing.assert_array_equal(np.sign(out), m.tri_signs)


def test_two_triangle_example():
    m = build_topology([(0, 0), (1, 0), (1, 1), (0, 1)], [(0, 1, 2), (0, 2, 3)])
    inner = np.flatnonzero(~m.edge_boundary)
    assert len(inner) == 1
    assert m.edges[inner[0]].tolist() == [0, 2]
    signs = m.tri_signs[m.tri_edges == inner[0]]
    assert sorted(signs.tolist()) == [-1, 1]


def test_clockwise_input_is_reoriented():
    m = build_topology([(0, 0), (1, 0), (0, 1)], [(0, 2, 1)])
    assert m.areas[0] == 0.5
    a, b, c = m.vertices[m.triangles[0]]
    assert (b - a)[0] * (c - a)[1] - (b - a)[1] * (c - a)[0] > 0


def test_unit_right_triangle_metrics():
    m = build_topology([(0, 0), (1, 0), (0, 1)], [(0, 1, 2)])
    assert m.areas[0] == 0.5
    assert m.diameters[0] == pytest.approx(np.sqrt(2))


def test_shape_metrics_structured():
    sm = shape_metrics(generate_structured(2))
    assert sm.h == pytest.approx(np.sqrt(2) / 2)
    assert shape_metrics(generate_structured(4)).min_angle == pytest.approx(45.0)
    ratios = [shape_metrics(generate_structured(n)).shape_ratio for n in (1, 2, 4, 8, 16)]
    np.testing.assert_allclose(ratios, ratios[0], rtol=1e-12)


def test_rejects_zero_area():
    with pytest.raises(MeshError, match="zero-area"):
        build_topology([(0, 0), (1, 0), (2, 0)], [(0, 1, 2)])


def test_rejects_non_manifold_edge():
    verts = [(0, 0), (1, 0), (0.5, 1), (0.5, -1), (0.2, 2)]
    with pytest.raises(MeshError, match="non-manifold"):
        build_topology(verts, [(0, 1, 2), (0, 3, 1), (0, 1, 4)])


def test_rejects_t_junction():
    # the lower square is split once, the upper triangle sees the whole top edge
    verts = [(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 1), (0.5, 2)]
    tris = [(0, 1, 4), (1, 2, 4), (0, 4, 3), (3, 2, 5)]
    with pytest.raises(MeshError, match="hanging"):
        build_topology(verts, tris)


def test_rejects_duplicates_and_bad_indices():
    with pytest.raises(MeshError, match="duplicate"):
        build_topology([(0, 0), (1, 0), (0, 1)], [(0, 1, 2), (1, 2, 0)])
    with pytest.raises(MeshError, match="out of range"):
        build_topology([(0, 0), (1, 0), (0, 1)], [(0, 1, 3)])
    with pytest.raises(ValueError):
        generate_structured(0)


def test_idempotent_rebuild():
    m = generate_structured(5)
    r = build_topology(m.vertices, m.triangles)
    np.testing.assert_array_equal(r.edges, m.edges)
    np.testing.assert_array_equal(r.tri_edges, m.tri_edges)
    np.testing.assert_array_equal(r.tri_signs, m.tri_signs)


def test_mesh_is_immutable():
    m = generate_structured(2)
    with pytest.raises(ValueError):
        m.vertices[0, 0] = 5.0


def test_roundtrip_file(tmp_path):
    m = generate_structured(3)
    path = tmp_path / "m.txt"
    write_mesh(m, path)
    text = path.read_text().splitlines()
    assert text[1] == f"{m.n_vertices} {m.n_edges} {m.n_triangles}"
    r = read_mesh(path)
    np.testing.assert_array_equal(r.vertices, m.vertices)
    np.testing.assert_array_equal(r.triangles, m.triangles)


def test_read_rejects_truncated(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# comment\n3 0 1\n0 0\n1 0\n")
    with pytest.raises(MeshError, match="header"):
        read_mesh(path)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_signs_independent_of_triangle_order(n, seed):
    m = generate_structured(n)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(m.n_triangles)
    tris = np.array([np.roll(t, k) for t, k in zip(m.triangles[perm], rng.integers(0, 3, m.n_triangles))])
    r = build_topology(m.vertices, tris)
    np.testing.assert_array_equal(r.edges, m.edges)
    # the edge with global index e gets the same orientation from the same triangle
    for new, old in enumerate(perm):
        key_new = dict(zip(r.tri_edges[new], r.tri_signs[new]))
        key_old = dict(zip(m.tri_edges[old], m.tri_signs[old]))
        assert key_new == key_old
