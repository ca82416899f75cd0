"""Finite element spaces on a staggered mesh.

Three spaces are supported, all piecewise linear (k = 1):

``Uh``       scalar, continuous across interior primal edges
``UhTilde``  ``Uh`` functions that are also single-valued at primal vertices
``Wh``       vector, normal component continuous across dual edges

Boundary values of the scalar spaces are kept as degrees of freedom and
listed in ``boundary_dofs``; the Dirichlet condition is imposed when solving.
Each sub-triangle maps its local basis onto global DOFs by pure renumbering.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .mesh import StaggeredMesh

MAX_DEGREE = 1


class SpaceKind(enum.Enum):
    UH = "Uh"
    UH_TILDE = "UhTilde"
    WH = "Wh"


@dataclass(frozen=True, eq=False)
class DofSpace:
    """Global DOF layout of one space.

    Attributes
    ----------
    cell_dofs : (nS, n_local) int array
        Global DOF of every local basis function (all weights are one).
    boundary_dofs : int array
        Scalar DOFs lying on the domain boundary (empty for ``Wh``).
    dof_points : (n_dofs, 2) array or None
        Nodal location of each scalar DOF.
    vector_basis : (nS, 6, 3, 2) array or None
        ``Wh`` only: local basis function f equals sum_v lambda_v * c[f, v].
    """

    kind: SpaceKind
    degree: int
    mesh: StaggeredMesh
    n_dofs: int
    cell_dofs: np.ndarray
    boundary_dofs: np.ndarray
    dof_points: np.ndarray | None = None
    vector_basis: np.ndarray | None = field(default=None, repr=False)

    @property
    def is_scalar(self) -> bool:
        return self.kind is not SpaceKind.WH

    @property
    def n_local(self) -> int:
        return self.cell_dofs.shape[1]

    def local_to_global(self, sub: int, i: int) -> tuple[int, float]:
        return int(self.cell_dofs[sub, i]), 1.0

    @property
    def free_dofs(self) -> np.ndarray:
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.boundary_dofs] = False
        return np.flatnonzero(mask)


def build_space(mesh: StaggeredMesh, kind, degree: int = 1) -> DofSpace:
    kind = SpaceKind(kind)
    if degree < 0:
        raise ValueError("degree must be non-negative")
    if degree != MAX_DEGREE:
        raise NotImplementedError(f"only k = {MAX_DEGREE} is implemented, got k = {degree}")
    if kind is SpaceKind.UH:
        return _build_uh(mesh)
    if kind is SpaceKind.UH_TILDE:
        return _build_uh_tilde(mesh)
    return _build_wh(mesh)


def _build_uh(mesh):
    n_pe = mesh.n_primal_edges
    e = mesh.sub_edges[:, 0]
    subs = mesh.sub_triangles
    # DOF (e, j) sits at endpoint j of primal edge e
    j0 = np.where(mesh.edge_vertices[e, 0] == subs[:, 0], 0, 1)
    cell = np.column_stack([2 * e + j0, 2 * e + 1 - j0, 2 * n_pe + np.arange(mesh.n_subs)])
    pts = np.vstack([mesh.vertices[mesh.edge_vertices[:n_pe].ravel()], mesh.vertices[subs[:, 2]]])
    bnd_edges = np.flatnonzero(mesh.edge_kind[:n_pe] == 1)
    boundary = np.sort(np.concatenate([2 * bnd_edges, 2 * bnd_edges + 1]))
    return DofSpace(SpaceKind.UH, 1, mesh, 2 * n_pe + mesh.n_subs, cell, boundary, pts)


def _build_uh_tilde(mesh):
    nv = mesh.n_primal_vertices
    subs = mesh.sub_triangles
    cell = np.column_stack([subs[:, 0], subs[:, 1], nv + np.arange(mesh.n_subs)])
    pts = np.vstack([mesh.vertices[:nv], mesh.vertices[subs[:, 2]]])
    return DofSpace(SpaceKind.UH_TILDE, 1, mesh, nv + mesh.n_subs, cell, mesh.boundary_vertices.copy(), pts)


# Local flux DOFs of sub-triangle i within its macro triangle (12 per macro):
#   2i, 2i+1        primal edge of sub i at its local vertices 0, 1
#   6 + 2k, 7 + 2k  dual edge (a_k, nu) at a_k and at nu
# Local basis order per sub: (edge0@v0, edge0@v1, edge1@v1, edge1@v2, edge2@v2, edge2@v0)
_LOCAL_EDGE_VERTEX = [(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 0)]


def _wh_local_numbering():
    table = np.empty((3, 6), dtype=np.int64)
    for i in range(3):
        k1 = (i + 1) % 3  # local edge 1 is dual edge (a_{i+1}, nu)
        k2 = i  # local edge 2 is dual edge (a_i, nu)
        table[i] = [2 * i, 2 * i + 1, 6 + 2 * k1, 7 + 2 * k1, 7 + 2 * k2, 6 + 2 * k2]
    return table


def _build_wh(mesh):
    table = _wh_local_numbering()
    i = np.arange(mesh.n_subs) % 3
    cell = 12 * mesh.macro_of_sub[:, None] + table[i]

    # dual-basis coefficients: at vertex v with incident local edges a, b,
    # d_a . n_a = 1, d_a . n_b = 0, using the reference normal of each edge
    nref = mesh.edge_ref_normal[mesh.sub_edges]  # (nS, 3, 2)
    coeff = np.zeros((mesh.n_subs, 6, 3, 2))
    for v in range(3):
        a, b = v, (v - 1) % 3  # local edges containing local vertex v
        mat = np.stack([nref[:, a], nref[:, b]], axis=1)  # rows n_a, n_b
        inv = np.linalg.inv(mat)  # columns d_a, d_b
        fa = _LOCAL_EDGE_VERTEX.index((a, v))
        fb = _LOCAL_EDGE_VERTEX.index((b, v))
        coeff[:, fa, v] = inv[:, :, 0]
        coeff[:, fb, v] = inv[:, :, 1]
    coeff.flags.writeable = False
    return DofSpace(SpaceKind.WH, 1, mesh, 12 * mesh.n_macro, cell, np.empty(0, dtype=np.int64), None, coeff)


def eval_basis(space: DofSpace, sub: int, point, tol: float = 1e-10):
    """Local basis at a physical ``point`` inside sub-triangle ``sub``.

    Scalar spaces return ``(values (3,), gradients (3, 2))``; ``Wh`` returns
    ``(values (6, 2), divergences (6,))``.
    """
    lam = space.mesh.barycentric(np.array([sub]), np.asarray(point, dtype=float)[None, :])[0]
    if np.any(lam < -tol):
        raise ValueError(f"point {point} lies outside sub-triangle {sub}")
    grad = space.mesh.grad_lambda[sub]
    if space.is_scalar:
        return lam, grad.copy()
    c = space.vector_basis[sub]
    values = np.einsum("v,fvd->fd", lam, c)
    div = np.einsum("vd,fvd->f", grad, c)
    return values, div


def eval_scalar(space: DofSpace, coeffs, subs, bary):
    """Values of a scalar field at barycentric points ``bary`` (nq, 3) of ``subs``."""
    local = np.asarray(coeffs)[space.cell_dofs[subs]]  # (ns, 3)
    return local @ bary.T


def eval_scalar_grad(space: DofSpace, coeffs, subs):
    local = np.asarray(coeffs)[space.cell_dofs[subs]]
    return np.einsum("si,sid->sd", local, space.mesh.grad_lambda[subs])


def eval_vector(space: DofSpace, coeffs, subs, bary):
    """Values (ns, nq, 2) of a ``Wh`` field at barycentric points of ``subs``."""
    local = np.asarray(coeffs)[space.cell_dofs[subs]]  # (ns, 6)
    nodal = np.einsum("sf,sfvd->svd", local, space.vector_basis[subs])  # vertex values
    return np.einsum("qv,svd->sqd", bary, nodal)


def eval_vector_div(space: DofSpace, coeffs, subs):
    local = np.asarray(coeffs)[space.cell_dofs[subs]]
    nodal = np.einsum("sf,sfvd->svd", local, space.vector_basis[subs])
    return np.einsum("svd,svd->s", nodal, space.mesh.grad_lambda[subs])


def interpolate(space: DofSpace, func) -> np.ndarray:
    """Nodal interpolant of ``func(x, y)`` in a scalar space."""
    if not space.is_scalar:
        raise ValueError("nodal interpolation is defined for scalar spaces")
    x, y = space.dof_points.T
    return np.asarray(np.broadcast_to(func(x, y), x.shape), dtype=float)


def interpolate_vector(space: DofSpace, func) -> np.ndarray:
    """``Wh`` interpolant of ``func(x, y) -> (fx, fy)`` via its flux DOFs.

    Each DOF is the normal component at an edge endpoint; on dual edges the
    two sides share it, so ``func`` should be continuous there.
    """
    mesh = space.mesh
    coeffs = np.zeros(space.n_dofs)
    subs = mesh.sub_triangles
    for f, (edge_local, v_local) in enumerate(_LOCAL_EDGE_VERTEX):
        p = mesh.vertices[subs[:, v_local]]
        val = np.stack(func(p[:, 0], p[:, 1]), axis=-1)
        n = mesh.edge_ref_normal[mesh.sub_edges[:, edge_local]]
        coeffs[space.cell_dofs[:, f]] = np.sum(val * n, axis=1)
    return coeffs


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    """Matrix of the embedding Ũ^h -> U^h, shape dim(Ũ^h) x dim(U^h).

    ``P.T @ u_tilde`` gives the U^h coefficients of ``u_tilde``.
    """

    P: sp.csr_matrix
    source: DofSpace
    target: DofSpace

    @property
    def shape(self):
        return self.P.shape


def build_embedding(uh: DofSpace, uh_tilde: DofSpace) -> EmbeddingMatrix:
    if uh.mesh is not uh_tilde.mesh:
        raise ValueError("spaces are defined on different meshes")
    if uh.degree != uh_tilde.degree:
        raise ValueError("spaces have different polynomial degrees")
    if uh.kind is not SpaceKind.UH or uh_tilde.kind is not SpaceKind.UH_TILDE:
        raise ValueError("expected (Uh, UhTilde)")
    rows = uh_tilde.cell_dofs.ravel()
    cols = uh.cell_dofs.ravel()
    target = np.full(uh.n_dofs, -1, dtype=np.int64)
    target[cols] = rows
    if np.any(target < 0):
        raise ValueError("U^h DOF not reached by any sub-triangle")
    P = sp.csr_matrix(
        (np.ones(uh.n_dofs), (target, np.arange(uh.n_dofs))), shape=(uh_tilde.n_dofs, uh.n_dofs)
    )
    return EmbeddingMatrix(P, uh_tilde, uh)
