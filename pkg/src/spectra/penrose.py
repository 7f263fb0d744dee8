"""Penrose rhombus tilings built from Robinson half-rhombus triangles.

Points live in the ring Z[zeta] with zeta = exp(2 pi i / 5), stored as four
integers in the basis 1, zeta, zeta^2, zeta^3.  Every substitution step first
scales all coordinates by the golden ratio phi, so the new subdivision points
stay in the ring and vertex identification is exact integer comparison.

Tile kinds: 0 is the acute triangle (36 degree apex, half a thin rhombus),
1 is the obtuse triangle (108 degree apex, half a thick rhombus).  Vertex A
is the apex and BC the base in both cases.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sps

from .errors import GeometryError
from .s2 import DispersionOperator

__all__ = [
    "ACUTE",
    "OBTUSE",
    "RobinsonTriangle",
    "Tiling",
    "TileGraph",
    "seed_decagon",
    "inflate_tiling",
    "tiling_at_level",
    "build_graph",
    "bfs_enumeration",
    "graph_laplacian",
    "path_graph",
    "grid_graph",
    "write_graph",
    "write_tiles",
    "tile_count",
]

ACUTE, OBTUSE = 0, 1
_KIND_NAMES = {ACUTE: "acute", OBTUSE: "obtuse"}

# multiplication by zeta, using zeta^4 = -1 - zeta - zeta^2 - zeta^3
_Z = np.array(
    [
        [0, 0, 0, -1],
        [1, 0, 0, -1],
        [0, 1, 0, -1],
        [0, 0, 1, -1],
    ],
    dtype=np.int64,
)
_Z2 = _Z @ _Z
_Z3 = _Z2 @ _Z
_PHI = -(_Z2 + _Z3)  # phi = -(zeta^2 + zeta^3)
_INV_PHI = _PHI - np.eye(4, dtype=np.int64)  # 1/phi = phi - 1
_OMEGA = -_Z3  # exp(i pi / 5) = -zeta^3
_ZETA_C = np.exp(2j * np.pi * np.arange(4) / 5)
_GOLDEN = (1 + 5**0.5) / 2


def _lin(M: np.ndarray, x: np.ndarray) -> np.ndarray:
    return x @ M.T


def _to_complex(x: np.ndarray) -> np.ndarray:
    return x @ _ZETA_C


def _mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product in Z[zeta] of row-aligned arrays of shape (..., 4)."""
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.int64)
    zk = a
    for k in range(4):
        out += b[..., k : k + 1] * zk
        zk = _lin(_Z, zk)
    return out


def _conj(a: np.ndarray) -> np.ndarray:
    # zeta^k -> zeta^(5-k); zeta^4 expands in the basis
    z4 = np.array([-1, -1, -1, -1], dtype=np.int64)
    out = np.zeros_like(a)
    out[..., 0] = a[..., 0]
    out += a[..., 1:2] * z4
    out[..., 3] += a[..., 2]
    out[..., 2] += a[..., 3]
    return out


def squared_length(d: np.ndarray) -> np.ndarray:
    """Exact |d|^2 as an element of Z[zeta] (it is real, in Z[phi])."""
    return _mul(d, _conj(d))


class RobinsonTriangle(NamedTuple):
    kind: int
    vertices: np.ndarray  # (3, 2) float plane coordinates, apex first
    orientation: int  # +1 counter-clockwise, -1 clockwise

    @property
    def kind_name(self) -> str:
        return _KIND_NAMES[self.kind]


@dataclass(frozen=True, eq=False)
class Tiling:
    """Tiles as exact ring coordinates: ``verts[t, v]`` is vertex v of tile t."""

    kinds: np.ndarray
    verts: np.ndarray
    level: int

    def __len__(self):
        return len(self.kinds)

    @property
    def counts(self) -> tuple[int, int]:
        n_acute = int(np.sum(self.kinds == ACUTE))
        return n_acute, len(self) - n_acute

    def plane_vertices(self) -> np.ndarray:
        """(T, 3, 2) float coordinates."""
        z = _to_complex(self.verts)
        return np.stack([z.real, z.imag], axis=-1)

    @property
    def tiles(self) -> list[RobinsonTriangle]:
        xy = self.plane_vertices()
        e1 = xy[:, 1] - xy[:, 0]
        e2 = xy[:, 2] - xy[:, 0]
        orient = np.sign(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]).astype(int)
        return [RobinsonTriangle(int(k), v, int(o)) for k, v, o in zip(self.kinds, xy, orient)]


def seed_decagon() -> Tiling:
    """The 20-tile decagon: a sun of ten mirrored acute triangles, subdivided once.

    Mirroring every other triangle of the sun is what makes the subdivision
    edge-to-edge; one substitution turns it into 10 acute + 10 obtuse tiles
    filling a regular decagon.
    """
    omega = np.eye(4, dtype=np.int64)[0]
    pts = [omega]
    for _ in range(10):
        pts.append(_lin(_OMEGA, pts[-1]))
    verts = []
    for i in range(10):
        b, c = pts[i], pts[i + 1]
        if i % 2 == 0:
            b, c = c, b
        verts.append([np.zeros(4, dtype=np.int64), b, c])
    sun = Tiling(np.zeros(10, dtype=np.int8), np.array(verts, dtype=np.int64), -1)
    seed = _subdivide(sun)
    return Tiling(seed.kinds, seed.verts, 0)


def _subdivide(t: Tiling) -> Tiling:
    V = _lin(_PHI, t.verts)
    raw = t.verts
    A, B, C = V[:, 0], V[:, 1], V[:, 2]
    a, b, c = raw[:, 0], raw[:, 1], raw[:, 2]
    acute = t.kinds == ACUTE
    nchild = np.where(acute, 2, 3)
    start = np.r_[0, np.cumsum(nchild)[:-1]]
    total = int(nchild.sum())
    kinds = np.empty(total, dtype=np.int8)
    verts = np.empty((total, 3, 4), dtype=np.int64)

    ia = np.flatnonzero(acute)
    P = A[ia] + (b[ia] - a[ia])  # A + (B - A)/phi in scaled coordinates
    s = start[ia]
    kinds[s] = ACUTE
    verts[s] = np.stack([C[ia], P, B[ia]], axis=1)
    kinds[s + 1] = OBTUSE
    verts[s + 1] = np.stack([P, C[ia], A[ia]], axis=1)

    io = np.flatnonzero(~acute)
    Q = B[io] + (a[io] - b[io])
    R = B[io] + (c[io] - b[io])
    s = start[io]
    kinds[s] = OBTUSE
    verts[s] = np.stack([R, C[io], A[io]], axis=1)
    kinds[s + 1] = OBTUSE
    verts[s + 1] = np.stack([Q, R, B[io]], axis=1)
    kinds[s + 2] = ACUTE
    verts[s + 2] = np.stack([R, Q, A[io]], axis=1)
    return Tiling(kinds, verts, t.level + 1)


def inflate_tiling(t: Tiling, steps: int = 1, validate: bool = True) -> Tiling:
    """Apply the substitution ``steps`` times; tile size stays fixed, the patch grows."""
    if steps < 1:
        raise ValueError("steps must be positive")
    for _ in range(steps):
        t = _subdivide(t)
    if validate:
        check_tiling(t)
    return t


def tiling_at_level(level: int, validate: bool = True) -> Tiling:
    t = seed_decagon()
    return inflate_tiling(t, level, validate) if level > 0 else t


def tile_count(level: int) -> int:
    """Totals from t_{k+1} = 3 t_k - t_{k-1}, t_0 = 20, t_1 = 50."""
    a, b = 20, 50
    for _ in range(level):
        a, b = b, 3 * b - a
    return a


# ------------------------------------------------------------------ graphs


class _Topology(NamedTuple):
    vert_ids: np.ndarray  # (T, 3) node ids of tile corners
    points: np.ndarray  # (V, 4) exact coordinates
    sides: np.ndarray  # (S, 2) vertex ids, sorted pairs
    side_tiles: list  # tiles incident to each side
    tile_sides: np.ndarray  # (T, 3) side ids in order AB, BC, CA


def _topology(t: Tiling) -> _Topology:
    flat = t.verts.reshape(-1, 4)
    uniq, first, inv = np.unique(flat, axis=0, return_index=True, return_inverse=True)
    # renumber vertices by first appearance so ids follow tile order
    order = np.argsort(first, kind="stable")
    rank = np.empty(len(order), dtype=np.int64)
    rank[order] = np.arange(len(order))
    vert_ids = rank[inv.ravel()].reshape(-1, 3)
    points = uniq[order]
    pairs = np.stack(
        [vert_ids[:, [0, 1]], vert_ids[:, [1, 2]], vert_ids[:, [2, 0]]], axis=1
    ).reshape(-1, 2)
    pairs = np.sort(pairs, axis=1)
    sides, sfirst, sinv = np.unique(pairs, axis=0, return_index=True, return_inverse=True)
    sorder = np.argsort(sfirst, kind="stable")
    srank = np.empty(len(sorder), dtype=np.int64)
    srank[sorder] = np.arange(len(sorder))
    tile_sides = srank[sinv.ravel()].reshape(-1, 3)
    sides = sides[sorder]
    side_tiles = [[] for _ in range(len(sides))]
    for ti, row in enumerate(tile_sides.tolist()):
        for s in row:
            side_tiles[s].append(ti)
    return _Topology(vert_ids, points, sides, side_tiles, tile_sides)


def check_tiling(t: Tiling, tol: float = 1e-9) -> None:
    """Edge-to-edge and shape checks; raises GeometryError on violation."""
    topo = _topology(t)
    mult = np.array([len(s) for s in topo.side_tiles])
    if np.any(mult > 2):
        raise GeometryError(f"{int(np.sum(mult > 2))} sides are shared by more than two tiles")
    V, E, F = len(topo.points), len(topo.sides), len(t)
    if V - E + F != 1:
        raise GeometryError(f"Euler characteristic {V - E + F} != 1: patch is not an edge-to-edge disk")
    xy = t.plane_vertices()
    ab = np.linalg.norm(xy[:, 1] - xy[:, 0], axis=1)
    ac = np.linalg.norm(xy[:, 2] - xy[:, 0], axis=1)
    bc = np.linalg.norm(xy[:, 2] - xy[:, 1], axis=1)
    want = np.where(t.kinds == ACUTE, 1 / _GOLDEN, _GOLDEN)
    if np.max(np.abs(ab - ac) / ab) > tol or np.max(np.abs(bc / ab - want)) > tol:
        raise GeometryError("triangle side ratios deviate from the golden triangles")


@dataclass(frozen=True, eq=False)
class TileGraph:
    """Simple undirected graph with plane positions and a boundary mask.

    ``boundary[i]`` marks nodes whose neighbourhood in the infinite tiling is
    not fully present in this patch.
    """

    n_nodes: int
    edges: np.ndarray
    model: str
    positions: np.ndarray
    boundary: np.ndarray
    level: int = -1

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_nodes)

    def adjacency(self) -> sps.csr_matrix:
        e = self.edges
        A = sps.coo_matrix(
            (np.ones(2 * len(e)), (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])),
            shape=(self.n_nodes, self.n_nodes),
        ).tocsr()
        A.sum_duplicates()
        return A

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_nodes)

    def is_connected(self) -> bool:
        from scipy.sparse.csgraph import connected_components

        return connected_components(self.adjacency(), directed=False)[0] == 1


def build_graph(t: Tiling, model: str) -> TileGraph:
    """T1: tiles joined across shared sides.  T2: triangle vertices and sides.
    T3: T2 without the longest and shortest side classes (the triangle bases)."""
    model = model.upper()
    topo = _topology(t)
    boundary_side = np.array([len(s) == 1 for s in topo.side_tiles])
    if model == "T1":
        pairs = [s for s in topo.side_tiles if len(s) == 2]
        edges = np.array(sorted(tuple(sorted(p)) for p in pairs), dtype=np.int64).reshape(-1, 2)
        xy = t.plane_vertices().mean(axis=1)
        bnd = boundary_side[topo.tile_sides].any(axis=1)
        g = TileGraph(len(t), edges, "T1", xy, bnd, t.level)
    elif model in ("T2", "T3"):
        z = _to_complex(topo.points)
        xy = np.c_[z.real, z.imag]
        bnd = np.zeros(len(topo.points), dtype=bool)
        bnd[topo.sides[boundary_side].ravel()] = True
        edges = topo.sides
        if model == "T3":
            d = topo.points[edges[:, 0]] - topo.points[edges[:, 1]]
            sq = squared_length(d)
            classes, inv = np.unique(sq, axis=0, return_inverse=True)
            inv = inv.ravel()
            size = np.array([_to_complex(c).real for c in classes])
            drop = {int(np.argmax(size)), int(np.argmin(size))}
            edges = edges[~np.isin(inv, list(drop))]
        edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
        g = TileGraph(len(topo.points), edges, model, xy, bnd, t.level)
    else:
        raise ValueError(f"unknown graph model {model!r}")
    if len(g.edges) and np.any(g.edges[:, 0] == g.edges[:, 1]):
        raise GeometryError("graph has a self-loop")
    if not g.is_connected():
        raise GeometryError(f"{model} graph is disconnected")
    return g


def path_graph(n: int) -> TileGraph:
    e = np.c_[np.arange(n - 1), np.arange(1, n)]
    bnd = np.zeros(n, dtype=bool)
    bnd[[0, n - 1]] = True
    return TileGraph(n, e, "path", np.c_[np.arange(n, dtype=float), np.zeros(n)], bnd)


def grid_graph(m: int) -> TileGraph:
    """m x m square lattice patch."""
    idx = np.arange(m * m).reshape(m, m)
    e = np.r_[np.c_[idx[:, :-1].ravel(), idx[:, 1:].ravel()], np.c_[idx[:-1].ravel(), idx[1:].ravel()]]
    ii, jj = np.divmod(np.arange(m * m), m)
    bnd = (ii == 0) | (jj == 0) | (ii == m - 1) | (jj == m - 1)
    return TileGraph(m * m, e, "grid", np.c_[jj, ii].astype(float), bnd)


# ------------------------------------------------------------- enumeration


def default_root(g: TileGraph, center=(0.0, 0.0)) -> int:
    d = np.hypot(g.positions[:, 0] - center[0], g.positions[:, 1] - center[1])
    # round away float noise so equidistant nodes tie and the lowest id wins
    d = np.round(d, 9)
    return int(np.flatnonzero(d == d.min())[0])


def bfs_enumeration(g: TileGraph, root: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """Breadth-first order from ``root`` and the dispersion table.

    Returns ``(order, f)`` where ``order[i]`` is the node listed at position
    i + 1 and ``f[n-1]`` = f(n) is the largest 1-based position among the
    first n nodes and their neighbours, padded to at least n + 1.
    """
    root = default_root(g) if root is None else int(root)
    A = g.adjacency()
    n = g.n_nodes
    pos = np.full(n, -1, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    order[0] = root
    pos[root] = 0
    head, tail = 0, 1
    while head < tail:
        u = order[head]
        head += 1
        for w in A.indices[A.indptr[u] : A.indptr[u + 1]]:
            if pos[w] < 0:
                pos[w] = tail
                order[tail] = w
                tail += 1
    if tail != n:
        raise ValueError("graph is not connected")
    reach = np.empty(n, dtype=np.int64)
    for i, u in enumerate(order):
        nb = A.indices[A.indptr[u] : A.indptr[u + 1]]
        reach[i] = max(pos[nb].max() if len(nb) else 0, i) + 1
    f = np.maximum(np.maximum.accumulate(reach), np.arange(2, n + 2))
    return order, f


def graph_laplacian(g: TileGraph, root: Optional[int] = None) -> DispersionOperator:
    """L = D - adjacency in BFS order; exact columns stop at the first boundary node."""
    order, f = bfs_enumeration(g, root)
    A = g.adjacency()
    L = (sps.diags(np.asarray(A.sum(axis=1)).ravel()) - A).tocsr()
    L = L[order][:, order].tocsr()
    bnd = g.boundary[order]
    exact = int(np.argmax(bnd)) if bnd.any() else g.n_nodes
    return DispersionOperator(L, f, np.zeros(g.n_nodes), exact, name=f"graph-{g.model}", order=order)


# ------------------------------------------------------------------ export


def write_graph(g: TileGraph, stem) -> tuple[Path, Path]:
    """``stem.edges`` ("N M model level", then 1-based "i j") and ``stem.xy``."""
    stem = Path(stem)
    ep, xp = stem.with_suffix(".edges"), stem.with_suffix(".xy")
    lines = [f"{g.n_nodes} {len(g.edges)} {g.model} {g.level}"]
    lines += [f"{i + 1} {j + 1}" for i, j in g.edges.tolist()]
    ep.write_text("\n".join(lines) + "\n", encoding="utf-8")
    xp.write_text("".join(f"{x:.17g} {y:.17g}\n" for x, y in g.positions), encoding="utf-8")
    return ep, xp


def write_tiles(t: Tiling, path) -> Path:
    path = Path(path)
    xy = t.plane_vertices()
    rows = [
        f"{_KIND_NAMES[int(k)]} " + " ".join(f"{v:.17g}" for v in tri.ravel())
        for k, tri in zip(t.kinds, xy)
    ]
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return path
