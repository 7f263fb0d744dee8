import numpy as np
import pytest
import scipy.sparse as sps
from hypothesis import given, strategies as st

from spectra.penrose import (
    ACUTE,
    OBTUSE,
    bfs_enumeration,
    build_graph,
    check_tiling,
    graph_laplacian,
    grid_graph,
    inflate_tiling,
    path_graph,
    seed_decagon,
    tile_count,
    tiling_at_level,
    write_graph,
    write_tiles,
)

GOLDEN = (1 + 5**0.5) / 2


@pytest.fixture(scope="module")
def level2():
    return tiling_at_level(2)


@pytest.fixture(scope="module")
def level4():
    return tiling_at_level(4)


def test_seed_decagon():
    t = seed_decagon()
    assert len(t) == 20 and t.counts == (10, 10) and t.level == 0
    xy = t.plane_vertices().reshape(-1, 2)
    r = np.round(np.hypot(xy[:, 0], xy[:, 1]), 9)
    outer = np.unique(np.round(xy[r == r.max()], 9), axis=0)
    assert len(outer) == 10
    # the ten outer corners sit at equal angular steps
    ang = np.sort(np.mod(np.arctan2(outer[:, 1], outer[:, 0]), 2 * np.pi))
    assert np.allclose(np.diff(ang), np.pi / 5)


def test_inflation_counts():
    t = seed_decagon()
    counts = []
    for _ in range(4):
        t = inflate_tiling(t)
        counts.append(len(t))
    assert counts == [50, 130, 340, 890]
    assert t.level == 4
    assert [tile_count(k) for k in range(10)] == [20, 50, 130, 340, 890, 2330, 6100, 15970, 41810, 109460]
    with pytest.raises(ValueError):
        inflate_tiling(t, 0)


@pytest.mark.slow
def test_level9_tile_count():
    t = tiling_at_level(9, validate=False)
    assert len(t) == 109460


def test_substitution_matrix_counts():
    prev = seed_decagon()
    for _ in range(5):
        nxt = inflate_tiling(prev, validate=False)
        a, o = prev.counts
        # acute -> acute + obtuse, obtuse -> acute + 2 obtuse
        assert nxt.counts == (a + o, a + 2 * o)
        prev = nxt


def test_triangle_shapes(level4):
    for tri in level4.tiles[:200]:
        v = tri.vertices
        s = sorted(np.linalg.norm(v[[1, 2, 0]] - v, axis=1))
        if tri.kind == ACUTE:
            assert s[1] / s[0] == pytest.approx(GOLDEN, rel=1e-9) and s[2] == pytest.approx(s[1], rel=1e-9)
        else:
            assert tri.kind == OBTUSE
            assert s[1] == pytest.approx(s[0], rel=1e-9) and s[2] / s[0] == pytest.approx(GOLDEN, rel=1e-9)
        assert tri.orientation in (-1, 1)


def test_tiles_are_interior_disjoint(level2):
    # total area equals the area of the patch's own boundary polygon
    xy = level2.plane_vertices()
    e1, e2 = xy[:, 1] - xy[:, 0], xy[:, 2] - xy[:, 0]
    areas = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    check_tiling(level2)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1.5, 1.5, (4000, 2)) * xy.reshape(-1, 2).max()
    hits = np.zeros(len(pts), dtype=int)
    for tri in xy:
        a, b, c = tri
        d = lambda p, q, r: (q[0] - p[0]) * (r[:, 1] - p[1]) - (q[1] - p[1]) * (r[:, 0] - p[0])
        s1, s2, s3 = d(a, b, pts), d(b, c, pts), d(c, a, pts)
        inside = ((s1 > 0) & (s2 > 0) & (s3 > 0)) | ((s1 < 0) & (s2 < 0) & (s3 < 0))
        hits += inside
    assert hits.max() <= 1
    assert areas.min() > 0


@pytest.mark.parametrize("model,nodes,edges", [("T1", 130, 185), ("T2", 76, 205), ("T3", 76, 135)])
def test_level2_graph_counts(level2, model, nodes, edges):
    g = build_graph(level2, model)
    assert (g.n_nodes, len(g.edges)) == (nodes, edges)
    assert g.is_connected()


def test_t2_t3_share_nodes(level4):
    g2, g3 = build_graph(level4, "T2"), build_graph(level4, "T3")
    assert g2.n_nodes == g3.n_nodes and np.array_equal(g2.positions, g3.positions)
    e2 = set(map(tuple, g2.edges.tolist()))
    assert set(map(tuple, g3.edges.tolist())) < e2


def test_t3_keeps_one_rhombus_length(level4):
    g = build_graph(level4, "T3")
    d = g.positions[g.edges[:, 0]] - g.positions[g.edges[:, 1]]
    L = np.hypot(d[:, 0], d[:, 1])
    assert np.ptp(L) / L.max() < 1e-9


def test_t1_edges_are_shared_sides(level4):
    g = build_graph(level4, "T1")
    xy = level4.plane_vertices()
    key = lambda p, q: tuple(sorted([tuple(np.round(p, 8)), tuple(np.round(q, 8))]))
    count = {}
    for tri in xy:
        for i in range(3):
            k = key(tri[i], tri[(i + 1) % 3])
            count[k] = count.get(k, 0) + 1
    assert sum(1 for v in count.values() if v == 2) == len(g.edges)
    deg = g.degrees()
    assert np.all(deg[~g.boundary] == 3)
    assert np.all(deg <= 3)


def test_unknown_model(level2):
    with pytest.raises(ValueError):
        build_graph(level2, "T4")


def test_path_graph_laplacian():
    g = path_graph(3)
    order, f = bfs_enumeration(g, root=0)
    assert order.tolist() == [0, 1, 2] and f.tolist() == [2, 3, 4]
    op = graph_laplacian(g, root=0)
    assert np.array_equal(op.matrix.toarray(), [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])


def test_path_bfs_from_end_is_identity():
    order, f = bfs_enumeration(path_graph(10), root=0)
    assert order.tolist() == list(range(10))
    assert f.tolist() == list(range(2, 12))


def test_square_lattice_frontier_grows_like_sqrt():
    g = grid_graph(61)
    order, f = bfs_enumeration(g, root=30 * 61 + 30)
    n = np.array([100, 400, 1600])
    excess = f[n - 1] - n
    ratio = excess / np.sqrt(n)
    assert np.all(ratio > 0.5) and np.all(ratio < 5)
    assert excess[2] > excess[1] > excess[0]


@pytest.mark.parametrize("model", ["T1", "T2", "T3"])
def test_laplacian_contract(level4, model):
    g = build_graph(level4, model)
    op = graph_laplacian(g)
    L = op.matrix
    assert np.allclose(np.asarray(L.sum(axis=1)).ravel(), 0)
    assert np.all(np.diff(op.f_table) >= 0)
    assert np.all(op.f_table >= np.arange(2, g.n_nodes + 2))
    # every edge (i, j) with i <= n lands at j <= f(n)
    C = sps.triu(L, 1).tocoo()
    i, j = np.minimum(C.row, C.col), np.maximum(C.row, C.col)
    assert np.all(j + 1 <= op.f_table[i])
    assert not g.boundary[op.order[: op.exact_columns]].any()
    assert g.boundary[op.order[op.exact_columns]]


@given(st.integers(0, 3), st.sampled_from(["T1", "T2", "T3"]), st.integers(0, 10**6))
def test_laplacian_kernel_is_constants(level, model, seed):
    g = build_graph(tiling_at_level(level), model)
    root = np.random.default_rng(seed).integers(g.n_nodes)
    op = graph_laplacian(g, root=root)
    ev = np.linalg.eigvalsh(op.matrix.toarray())
    assert abs(ev[0]) < 1e-10 and ev[1] > 1e-10
    order, f = bfs_enumeration(g, root)
    assert order[0] == root and sorted(order.tolist()) == list(range(g.n_nodes))


def test_exports(tmp_path, level2):
    g = build_graph(level2, "T1")
    ep, xp = write_graph(g, tmp_path / "t1")
    lines = ep.read_text().splitlines()
    assert lines[0] == "130 185 T1 2" and len(lines) == 186
    assert len(xp.read_text().splitlines()) == 130
    tp = write_tiles(level2, tmp_path / "l2.tiles")
    rows = tp.read_text().splitlines()
    assert len(rows) == 130 and rows[0].split()[0] in ("acute", "obtuse") and len(rows[0].split()) == 7
