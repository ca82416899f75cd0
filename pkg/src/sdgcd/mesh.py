"""Staggered two-level triangulations.

An initial triangulation ``T_u`` (macro triangles) is refined by joining an
interior point of every macro triangle to its three vertices.  Edges of the
refined mesh are classified as

* primal interior   -- interior edges of ``T_u``
* primal boundary   -- edges of ``T_u`` on the domain boundary
* dual              -- the new edges created by the subdivision

Sub-triangle ``3*m + i`` of macro triangle ``m = (a0, a1, a2)`` has local
vertices ``(a_i, a_{i+1}, nu)``, so its local edge 0 is always primal and
local edges 1, 2 are dual.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree


class EdgeKind(enum.IntEnum):
    PRIMAL_INTERIOR = 0
    PRIMAL_BOUNDARY = 1
    DUAL = 2


@dataclass(frozen=True)
class Edge:
    """One edge of the refined triangulation.

    ``plus_normal`` is the outward unit normal of the first adjacent
    sub-triangle (tau+); the outward normal of tau- is its negative.
    """

    index: int
    endpoints: tuple[int, int]
    kind: EdgeKind
    normal: np.ndarray
    adjacent_subs: tuple[int, ...]
    length: float
    plus_normal: np.ndarray

    @property
    def is_interior(self) -> bool:
        return len(self.adjacent_subs) == 2


@dataclass(frozen=True)
class MacroRegion:
    kind: str  # "S" (macro triangle) or "R" (primal-edge patch)
    anchor: int  # macro triangle index for S, edge index for R
    member_subs: tuple[int, ...]


def centroid(triangle) -> np.ndarray:
    """Arithmetic mean of the three vertices of ``triangle`` (3x2)."""
    p = np.asarray(triangle, dtype=float)
    if p.shape != (3, 2):
        raise ValueError("triangle must be three 2D points")
    if abs(_signed_area(p[0], p[1], p[2])) <= 1e-14 * max(1.0, np.abs(p).max()) ** 2:
        raise ValueError("degenerate (zero-area) triangle")
    return p.mean(axis=0)


def _signed_area(p0, p1, p2):
    return 0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))


def _outward_normals(pts, tri, local_edge):
    """Outward unit normals of CCW triangles ``tri`` on edge (v_i, v_{i+1})."""
    p = pts[tri[np.arange(len(tri)), local_edge]]
    q = pts[tri[np.arange(len(tri)), (local_edge + 1) % 3]]
    d = q - p
    n = np.column_stack([d[:, 1], -d[:, 0]])
    return n / np.linalg.norm(n, axis=1)[:, None]


def jump(edge: Edge, trace_plus, trace_minus):
    """Jump ``(n.n+) phi+ + (n.n-) phi-`` of a scalar (or normal-component) trace."""
    if not edge.is_interior:
        raise ValueError(f"edge {edge.index} is a boundary edge; jump is undefined")
    s = float(np.dot(edge.normal, edge.plus_normal))
    return s * np.asarray(trace_plus) - s * np.asarray(trace_minus)


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


class StaggeredMesh:
    """Immutable staggered mesh.

    Attributes
    ----------
    vertices : (nV, 2) array
        Vertices of ``T_u`` first (``n_primal_vertices`` of them), followed by
        one interior point per macro triangle.
    macro_triangles : (nM, 3) int array, counter-clockwise.
    interior_point_index : (nM,) int array into ``vertices``.
    sub_triangles : (3 nM, 3) int array, local vertex 2 is the interior point.
    macro_of_sub : (3 nM,) int array.
    edge_vertices, edge_kind, edge_normal, edge_plus_normal, edge_subs,
    edge_length : per-edge arrays; primal edges are numbered before dual ones
        and ``edge_subs[:, 1] == -1`` on boundary edges.
    sub_edges : (3 nM, 3) int array, edge index of local edge (v_i, v_{i+1}).
    """

    def __init__(self, vertices, macro_triangles, interior_points=None, normal_flips=None):
        verts = np.asarray(vertices, dtype=float)
        macro = np.array(macro_triangles, dtype=np.int64)
        if verts.ndim != 2 or verts.shape[1] != 2:
            raise ValueError("vertices must have shape (n, 2)")
        if macro.ndim != 2 or macro.shape[1] != 3 or len(macro) == 0:
            raise ValueError("macro_triangles must have shape (m, 3), m > 0")
        area = _signed_area(verts[macro[:, 0]].T, verts[macro[:, 1]].T, verts[macro[:, 2]].T)
        if np.any(np.abs(area) <= 1e-14):
            raise ValueError("degenerate macro triangle")
        flip = area < 0
        macro[flip] = macro[flip][:, [0, 2, 1]]

        n_primal = len(verts)
        n_macro = len(macro)
        if interior_points is None:
            nu = verts[macro].mean(axis=1)
        else:
            nu = np.asarray(interior_points, dtype=float)
        nu_index = n_primal + np.arange(n_macro)
        all_verts = np.vstack([verts, nu])

        subs = np.empty((3 * n_macro, 3), dtype=np.int64)
        for i in range(3):
            subs[i::3, 0] = macro[:, i]
            subs[i::3, 1] = macro[:, (i + 1) % 3]
            subs[i::3, 2] = nu_index
        macro_of_sub = np.repeat(np.arange(n_macro), 3)
        sub_area = _signed_area(*(all_verts[subs[:, j]].T for j in range(3)))
        if np.any(sub_area <= 0):
            raise ValueError("interior point yields a non-positive sub-triangle")

        # primal edges, deduplicated by sorted vertex pair
        pairs = np.sort(subs[:, :2], axis=1)
        uniq, first, inverse = np.unique(pairs, axis=0, return_index=True, return_inverse=True)
        # keep first-appearance ordering for determinism
        order = np.argsort(first, kind="stable")
        rank = np.empty_like(order)
        rank[order] = np.arange(len(order))
        primal_id = rank[inverse.ravel()]
        n_primal_edges = len(uniq)
        primal_vertices = subs[first[order], :2]
        primal_subs = np.full((n_primal_edges, 2), -1, dtype=np.int64)
        counts = np.zeros(n_primal_edges, dtype=np.int64)
        for s, e in enumerate(primal_id):
            if counts[e] >= 2:
                raise ValueError("non-manifold edge in macro triangulation")
            primal_subs[e, counts[e]] = s
            counts[e] += 1
        primal_subs.sort(axis=1)
        # -1 sorts first; move to the second slot
        bnd = counts == 1
        primal_subs[bnd] = primal_subs[bnd][:, ::-1]

        # dual edges: (a_k, nu) shared by subs 3m + k (local edge 2) and 3m + k - 1 (local edge 1)
        m_idx = np.repeat(np.arange(n_macro), 3)
        k_idx = np.tile(np.arange(3), n_macro)
        dual_vertices = np.column_stack([macro[m_idx, k_idx], nu_index[m_idx]])
        s_a = 3 * m_idx + k_idx
        s_b = 3 * m_idx + (k_idx - 1) % 3
        dual_subs = np.sort(np.column_stack([s_a, s_b]), axis=1)

        sub_edges = np.empty((3 * n_macro, 3), dtype=np.int64)
        sub_edges[:, 0] = primal_id
        dual_id = n_primal_edges + np.arange(3 * n_macro)
        # sub 3m+i: local edge 1 = (a_{i+1}, nu) -> dual k=i+1; local edge 2 = (nu, a_i) -> dual k=i
        for i in range(3):
            sub_edges[i::3, 1] = dual_id[3 * np.arange(n_macro) + (i + 1) % 3]
            sub_edges[i::3, 2] = dual_id[3 * np.arange(n_macro) + i]

        edge_vertices = np.vstack([primal_vertices, dual_vertices])
        edge_subs = np.vstack([primal_subs, dual_subs])
        edge_kind = np.concatenate(
            [np.where(bnd, EdgeKind.PRIMAL_BOUNDARY, EdgeKind.PRIMAL_INTERIOR), np.full(3 * n_macro, EdgeKind.DUAL)]
        ).astype(np.int8)

        # outward normal of tau+ on the edge
        plus = edge_subs[:, 0]
        local = np.argmax(sub_edges[plus] == np.arange(len(edge_vertices))[:, None], axis=1)
        plus_normal = _outward_normals(all_verts, subs[plus], local)
        d = all_verts[edge_vertices[:, 1]] - all_verts[edge_vertices[:, 0]]
        length = np.linalg.norm(d, axis=1)

        normal = plus_normal.copy()
        if normal_flips is not None:
            flips = np.zeros(len(normal), dtype=bool)
            flips[np.asarray(normal_flips)] = True
            if np.any(flips & (edge_kind == EdgeKind.PRIMAL_BOUNDARY)):
                raise ValueError("boundary edge normals are fixed to the outward direction")
            normal[flips] *= -1.0

        # reference normal used to define flux degrees of freedom: the tangent
        # from the lower to the higher vertex index, rotated clockwise
        lo = edge_vertices.min(axis=1)
        hi = edge_vertices.max(axis=1)
        t = all_verts[hi] - all_verts[lo]
        ref_normal = np.column_stack([t[:, 1], -t[:, 0]]) / length[:, None]

        self.vertices = _readonly(all_verts)
        self.n_primal_vertices = n_primal
        self.macro_triangles = _readonly(macro)
        self.interior_point_index = _readonly(nu_index)
        self.sub_triangles = _readonly(subs)
        self.macro_of_sub = _readonly(macro_of_sub)
        self.sub_area = _readonly(sub_area)
        self.sub_edges = _readonly(sub_edges)
        self.edge_vertices = _readonly(edge_vertices)
        self.edge_subs = _readonly(edge_subs)
        self.edge_kind = _readonly(edge_kind)
        self.edge_plus_normal = _readonly(plus_normal)
        self.edge_normal = _readonly(normal)
        self.edge_ref_normal = _readonly(ref_normal)
        self.edge_length = _readonly(length)
        self.n_primal_edges = n_primal_edges
        self.N = None

    # ------------------------------------------------------------------ sizes
    @property
    def n_macro(self) -> int:
        return len(self.macro_triangles)

    @property
    def n_subs(self) -> int:
        return len(self.sub_triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edge_vertices)

    @property
    def interior_points(self) -> np.ndarray:
        return self.vertices[self.interior_point_index]

    def edges_of_kind(self, *kinds: EdgeKind) -> np.ndarray:
        return np.flatnonzero(np.isin(self.edge_kind, [int(k) for k in kinds]))

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        e = self.edges_of_kind(EdgeKind.PRIMAL_BOUNDARY)
        return np.unique(self.edge_vertices[e])

    @cached_property
    def grad_lambda(self) -> np.ndarray:
        """Gradients of the barycentric coordinates, shape (nS, 3, 2)."""
        p = self.vertices[self.sub_triangles]
        g = np.empty((self.n_subs, 3, 2))
        for i in range(3):
            a = p[:, (i + 1) % 3]
            b = p[:, (i + 2) % 3]
            # grad lambda_i is the inward normal of the opposite edge / height
            g[:, i, 0] = a[:, 1] - b[:, 1]
            g[:, i, 1] = b[:, 0] - a[:, 0]
        g /= 2.0 * self.sub_area[:, None, None]
        g.flags.writeable = False
        return g

    def barycentric(self, subs, points) -> np.ndarray:
        """Barycentric coordinates of ``points`` in sub-triangles ``subs``.

        ``points`` is (ns, 2) for one point per sub or (ns, nq, 2).
        """
        subs = np.asarray(subs)
        pts = np.asarray(points, dtype=float)
        p0 = self.vertices[self.sub_triangles[subs, 0]]
        g = self.grad_lambda[subs]
        if pts.ndim == 2:
            lam = np.einsum("sij,sj->si", g, pts - p0)
        else:
            lam = np.einsum("sij,sqj->sqi", g, pts - p0[:, None, :])
        lam[..., 0] += 1.0
        return lam

    def map_points(self, subs, bary) -> np.ndarray:
        """Physical coordinates of barycentric points ``bary`` (nq, 3) in ``subs``."""
        p = self.vertices[self.sub_triangles[np.asarray(subs)]]
        return np.einsum("qi,sij->sqj", bary, p)

    # ------------------------------------------------------------------ records
    def edge(self, i: int) -> Edge:
        subs = tuple(int(s) for s in self.edge_subs[i] if s >= 0)
        return Edge(
            index=int(i),
            endpoints=(int(self.edge_vertices[i, 0]), int(self.edge_vertices[i, 1])),
            kind=EdgeKind(int(self.edge_kind[i])),
            normal=self.edge_normal[i].copy(),
            adjacent_subs=subs,
            length=float(self.edge_length[i]),
            plus_normal=self.edge_plus_normal[i].copy(),
        )

    @cached_property
    def edges(self) -> list[Edge]:
        return [self.edge(i) for i in range(self.n_edges)]

    def region_S(self, m: int) -> MacroRegion:
        return MacroRegion("S", int(m), (3 * m, 3 * m + 1, 3 * m + 2))

    def region_R(self, e: int) -> MacroRegion:
        if self.edge_kind[e] == EdgeKind.DUAL:
            raise ValueError("R(e) is only defined for primal edges")
        return MacroRegion("R", int(e), tuple(int(s) for s in self.edge_subs[e] if s >= 0))

    def with_flipped_normals(self, edges: Sequence[int]) -> "StaggeredMesh":
        """Copy of this mesh with the fixed normal of interior ``edges`` reversed."""
        flips = np.flatnonzero(np.any(self.edge_normal != self.edge_plus_normal, axis=1))
        flips = np.setxor1d(flips, np.asarray(edges, dtype=np.int64))
        out = StaggeredMesh(
            self.vertices[: self.n_primal_vertices],
            self.macro_triangles,
            interior_points=self.interior_points,
            normal_flips=flips,
        )
        out.N = self.N
        return out

    # ------------------------------------------------------------------ output
    def dump(self, path) -> None:
        """Write the plain-text debug format (VERTICES / SUBTRIANGLES / EDGES)."""
        lines = ["VERTICES"]
        lines += [f"{i} {x:.17g} {y:.17g}" for i, (x, y) in enumerate(self.vertices)]
        lines.append("SUBTRIANGLES")
        lines += [
            f"{i} {t[0]} {t[1]} {t[2]} {m}" for i, (t, m) in enumerate(zip(self.sub_triangles, self.macro_of_sub))
        ]
        lines.append("EDGES")
        names = {int(k): k.name for k in EdgeKind}
        lines += [
            f"{i} {v[0]} {v[1]} {names[int(k)]} {n[0]:.17g} {n[1]:.17g}"
            for i, (v, k, n) in enumerate(zip(self.edge_vertices, self.edge_kind, self.edge_normal))
        ]
        Path(path).write_text("\n".join(lines) + "\n")


def build_structured(N: int) -> StaggeredMesh:
    """Uniform mesh of the unit square: N x N squares, each cut along the
    (i, j)-(i+1, j+1) diagonal, then subdivided at centroids."""
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    N = int(N)
    idx = np.arange((N + 1) ** 2).reshape(N + 1, N + 1)  # idx[j, i] -> (i/N, j/N)
    gi, gj = np.meshgrid(np.arange(N + 1), np.arange(N + 1))
    verts = np.column_stack([gi.ravel(), gj.ravel()]) / N
    v00 = idx[:-1, :-1].ravel()
    v10 = idx[:-1, 1:].ravel()
    v01 = idx[1:, :-1].ravel()
    v11 = idx[1:, 1:].ravel()
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    macro = np.empty((2 * N * N, 3), dtype=np.int64)
    macro[0::2] = lower
    macro[1::2] = upper
    mesh = StaggeredMesh(verts, macro)
    mesh.N = N
    return mesh


def from_triangulation(points, triangles, tol: float = 1e-12) -> StaggeredMesh:
    """General import path: merge points closer than ``tol * h`` and build the mesh."""
    pts = np.asarray(points, dtype=float)
    tris = np.asarray(triangles, dtype=np.int64)
    h = np.linalg.norm(pts[tris[:, 1]] - pts[tris[:, 0]], axis=1).max()
    tree = cKDTree(pts)
    rep = np.arange(len(pts))
    for a, b in sorted(tree.query_pairs(tol * h)):
        rep[max(a, b)] = rep[min(a, b)]
    keep, inv = np.unique(rep, return_inverse=True)
    return StaggeredMesh(pts[keep], inv[tris])


def replace_normal(edge: Edge, normal) -> Edge:
    return replace(edge, normal=np.asarray(normal, dtype=float))
