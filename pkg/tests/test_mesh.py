import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdgcd.mesh import EdgeKind, build_structured, centroid, from_triangulation, jump, replace_normal


@pytest.mark.parametrize("N", [1, 2, 4, 7])
def test_counts(N):
    m = build_structured(N)
    assert m.n_macro == 2 * N * N
    assert m.n_subs == 6 * N * N
    assert len(m.edges_of_kind(EdgeKind.DUAL)) == 6 * N * N
    assert len(m.edges_of_kind(EdgeKind.PRIMAL_INTERIOR)) == 3 * N * N - 2 * N
    assert len(m.edges_of_kind(EdgeKind.PRIMAL_BOUNDARY)) == 4 * N


def test_n4_dual_edges(mesh4):
    assert len(mesh4.edges_of_kind(EdgeKind.DUAL)) == 96


def test_n2_primal_edges_brute_force(mesh2):
    # enumerate the edges of the 2x2 split-square grid directly
    edges = set()
    for i in range(2):
        for j in range(2):
            a, b, c, d = (i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)
            for p, q in ((a, b), (b, c), (c, d), (d, a), (a, c)):
                edges.add(frozenset((p, q)))
    def on_boundary(e):
        p, q = tuple(e)
        return any(p[k] == q[k] and p[k] in (0, 2) for k in (0, 1))

    on_bnd = [e for e in edges if on_boundary(e)]
    assert len(edges) == 16 == len(mesh2.edges_of_kind(EdgeKind.PRIMAL_INTERIOR, EdgeKind.PRIMAL_BOUNDARY))
    assert len(on_bnd) == 8 == len(mesh2.edges_of_kind(EdgeKind.PRIMAL_BOUNDARY))


def test_centroid_examples():
    assert np.allclose(centroid([(0, 0), (1, 0), (0, 1)]), (1 / 3, 1 / 3))
    assert np.allclose(centroid([(0, 0), (2, 0), (0, 2)]), (2 / 3, 2 / 3))
    eq = [(np.cos(t), np.sin(t)) for t in (0, 2 * np.pi / 3, 4 * np.pi / 3)]
    assert np.allclose(centroid(eq), (0, 0), atol=1e-15)
    with pytest.raises(ValueError):
        centroid([(0, 0), (1, 1), (2, 2)])


def test_jump_examples(mesh2):
    e = mesh2.edge(int(mesh2.edges_of_kind(EdgeKind.DUAL)[0]))
    assert jump(e, 2.5, 2.5) == 0
    assert jump(e, 1.0, 0.0) == pytest.approx(1.0)
    flipped = replace_normal(e, -e.plus_normal)
    assert jump(flipped, 1.0, 3.0) == pytest.approx(2.0)
    bnd = mesh2.edge(int(mesh2.edges_of_kind(EdgeKind.PRIMAL_BOUNDARY)[0]))
    with pytest.raises(ValueError):
        jump(bnd, 1.0, 0.0)


def test_sub_areas_and_normals(mesh4):
    assert mesh4.sub_area.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all(mesh4.sub_area > 0)
    assert np.allclose(np.linalg.norm(mesh4.edge_normal, axis=1), 1.0)
    # boundary normals point out of the unit square
    for i in mesh4.edges_of_kind(EdgeKind.PRIMAL_BOUNDARY):
        mid = mesh4.vertices[mesh4.edge_vertices[i]].mean(axis=0)
        assert np.dot(mid - 0.5 + 0.5 * mesh4.edge_normal[i], mesh4.edge_normal[i]) > 0.5


def test_regions(mesh2):
    assert mesh2.region_S(3).member_subs == (9, 10, 11)
    interior = int(mesh2.edges_of_kind(EdgeKind.PRIMAL_INTERIOR)[0])
    assert len(mesh2.region_R(interior).member_subs) == 2
    with pytest.raises(ValueError):
        mesh2.region_R(int(mesh2.edges_of_kind(EdgeKind.DUAL)[0]))


def test_build_rejects_bad_N():
    for bad in (0, -1, 2.5):
        with pytest.raises(ValueError):
            build_structured(bad)


def test_arrays_are_read_only(mesh2):
    with pytest.raises(ValueError):
        mesh2.vertices[0, 0] = 1.0


def test_from_triangulation_merges_duplicates():
    pts = np.array([[0, 0], [1, 0], [1, 1], [0, 0], [1, 1], [0, 1]], dtype=float)
    tris = np.array([[0, 1, 2], [3, 4, 5]])
    m = from_triangulation(pts, tris)
    assert m.n_primal_vertices == 4
    assert len(m.edges_of_kind(EdgeKind.PRIMAL_INTERIOR)) == 1


def test_dump(tmp_path, mesh2):
    path = tmp_path / "mesh.txt"
    mesh2.dump(path)
    text = path.read_text().splitlines()
    assert text[0] == "VERTICES"
    assert "SUBTRIANGLES" in text and "EDGES" in text
    assert len(text) == 3 + len(mesh2.vertices) + mesh2.n_subs + mesh2.n_edges


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=6), st.data())
def test_barycentric_round_trip(N, data):
    m = build_structured(N)
    s = data.draw(st.integers(0, m.n_subs - 1))
    w = np.array(data.draw(st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3)))
    bary = (w / w.sum())[None, :]
    x = m.map_points([s], bary)[0]
    assert np.allclose(m.barycentric([s], x), bary, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=1, max_value=8))
def test_each_edge_has_consistent_neighbours(N):
    m = build_structured(N)
    for kind, n_adj in ((EdgeKind.PRIMAL_BOUNDARY, 1), (EdgeKind.PRIMAL_INTERIOR, 2), (EdgeKind.DUAL, 2)):
        idx = m.edges_of_kind(kind)
        assert np.all((m.edge_subs[idx] >= 0).sum(axis=1) == n_adj)
    # dual edges join two subs of the same macro triangle; primal ones never do
    dual = m.edges_of_kind(EdgeKind.DUAL)
    assert np.all(m.macro_of_sub[m.edge_subs[dual, 0]] == m.macro_of_sub[m.edge_subs[dual, 1]])
    inner = m.edges_of_kind(EdgeKind.PRIMAL_INTERIOR)
    assert np.all(m.macro_of_sub[m.edge_subs[inner, 0]] != m.macro_of_sub[m.edge_subs[inner, 1]])
