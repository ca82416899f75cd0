"""Assembly of the discrete bilinear forms and load vectors.

Row/column conventions:

* ``assemble_mass(Wh)``        (nW, nW)   (Psi_j, Psi_i)
* ``assemble_B(Wh, S)``        (nS, nW)   B_h(Psi_j, v_i)
* ``assemble_B_adjoint(Wh, S)`` (nW, nS)  B_h^*(v_j, Psi_i), i.e. compared with B.T
* ``assemble_R(Wh, S, b)``     (nS, nW)   (b . Psi_j, v_i)

Polynomial integrands use exact rules; terms involving the convection field
or source data use a degree-6 rule unless told otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .mesh import EdgeKind
from .quadrature import edge_rule, triangle_rule
from .spaces import DofSpace, SpaceKind

DATA_QUAD_DEGREE = 6
MIN_QUAD_DEGREE = 2


@dataclass(frozen=True)
class ConvectionField:
    """Convection field ``b(x, y) -> (b1, b2)`` acting on arrays."""

    b: Callable
    divergence_free: bool = True
    sup_norm_hint: float | None = None

    def __post_init__(self):
        if self.divergence_free:
            div = self.divergence_fd(np.random.default_rng(1234).random((100, 2)))
            scale = 1.0 + (self.sup_norm_hint if self.sup_norm_hint is not None else self._sup_estimate())
            if np.max(np.abs(div)) >= 1e-6 * scale:
                raise ValueError(f"convection field is not divergence free (|div b| = {np.max(np.abs(div)):.3e})")

    def __call__(self, x, y):
        bx, by = self.b(x, y)
        shape = np.shape(x)
        return np.broadcast_to(bx, shape).astype(float), np.broadcast_to(by, shape).astype(float)

    def _sup_estimate(self):
        g = np.linspace(0.0, 1.0, 21)
        X, Y = np.meshgrid(g, g)
        bx, by = self(X, Y)
        return float(np.max(np.hypot(bx, by)))

    def divergence_fd(self, points, h: float = 1e-4):
        """Fourth-order central-difference divergence at ``points`` (n, 2)."""
        x, y = np.asarray(points, dtype=float).T

        def d(comp, dx, dy):
            f = lambda s: self(x + s * dx, y + s * dy)[comp]  # noqa: E731
            return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h)

        return d(0, 1.0, 0.0) + d(1, 0.0, 1.0)


def zero_field() -> ConvectionField:
    return ConvectionField(lambda x, y: (0.0, 0.0), sup_norm_hint=0.0)


def constant_field(b1: float, b2: float) -> ConvectionField:
    return ConvectionField(lambda x, y: (b1, b2), sup_norm_hint=float(np.hypot(b1, b2)))


# ---------------------------------------------------------------- helpers
def _check_pair(wh: DofSpace, scalar: DofSpace):
    if wh.kind is not SpaceKind.WH:
        raise ValueError("first space must be Wh")
    if not scalar.is_scalar:
        raise ValueError("second space must be a scalar space")
    if wh.mesh is not scalar.mesh:
        raise ValueError("spaces are defined on different meshes")


def _scatter(rows, cols, local, shape):
    """Sum local blocks ``local[s, a, b]`` into a CSR matrix."""
    r = np.broadcast_to(rows[:, :, None], local.shape).ravel()
    c = np.broadcast_to(cols[:, None, :], local.shape).ravel()
    return sp.coo_matrix((local.ravel(), (r, c)), shape=shape).tocsr()


def _vector_nodal(wh: DofSpace, subs):
    return wh.vector_basis[subs]  # (ns, 6, 3, 2)


def _edge_points(mesh, edges, rule):
    p0 = mesh.vertices[mesh.edge_vertices[edges, 0]]
    p1 = mesh.vertices[mesh.edge_vertices[edges, 1]]
    return np.einsum("qk,ekd->eqd", rule.points, np.stack([p0, p1], axis=1))


# ---------------------------------------------------------------- matrices
def assemble_mass(wh: DofSpace) -> sp.csr_matrix:
    if wh.kind is not SpaceKind.WH:
        raise ValueError("mass matrix is assembled on Wh")
    mesh = wh.mesh
    rule = triangle_rule(2 * wh.degree)
    c = wh.vector_basis
    vals = np.einsum("qv,sfvd->sqfd", rule.points, c)  # (nS, nq, 6, 2)
    local = np.einsum("q,sqfd,sqgd->sfg", rule.weights, vals, vals) * mesh.sub_area[:, None, None]
    local = 0.5 * (local + local.transpose(0, 2, 1))  # bitwise symmetric
    return _scatter(wh.cell_dofs, wh.cell_dofs, local, (wh.n_dofs, wh.n_dofs))


def assemble_B(wh: DofSpace, scalar: DofSpace) -> sp.csr_matrix:
    """B_h(Psi, v) = (Psi, grad_h v) - sum_{F_p} <Psi.n, [v]>."""
    _check_pair(wh, scalar)
    mesh = wh.mesh
    shape = (scalar.n_dofs, wh.n_dofs)

    # volume: grad v is constant per sub, Psi is linear -> centroid value is exact
    psi_mean = wh.vector_basis.mean(axis=2)  # (nS, 6, 2)
    vol = np.einsum("sid,sfd->sif", mesh.grad_lambda, psi_mean) * mesh.sub_area[:, None, None]
    B = _scatter(scalar.cell_dofs, wh.cell_dofs, vol, shape)

    edges = mesh.edges_of_kind(EdgeKind.DUAL)
    rule = edge_rule(scalar.degree + 1)
    x = _edge_points(mesh, edges, rule)  # (ne, nq, 2)
    n = mesh.edge_normal[edges]
    sigma = np.einsum("ed,ed->e", n, mesh.edge_plus_normal[edges])  # n.n+ ; n.n- = -sigma
    tp, tm = mesh.edge_subs[edges, 0], mesh.edge_subs[edges, 1]
    lam_p = mesh.barycentric(tp, x)
    lam_m = mesh.barycentric(tm, x)
    psi = np.einsum("eqv,efvd->eqfd", lam_p, _vector_nodal(wh, tp))
    psi_n = np.einsum("eqfd,ed->eqf", psi, n)
    wl = rule.weights * mesh.edge_length[edges][:, None]  # (ne, nq)
    for lam, sub, sgn in ((lam_p, tp, 1.0), (lam_m, tm, -1.0)):
        local = -np.einsum("eq,eqi,eqf->eif", wl, lam, psi_n) * (sgn * sigma)[:, None, None]
        B = B + _scatter(scalar.cell_dofs[sub], wh.cell_dofs[tp], local, shape)
    return B.tocsr()


def assemble_B_adjoint(wh: DofSpace, scalar: DofSpace) -> sp.csr_matrix:
    """Independent assembly of B_h^*(v, Psi) = -(v, div_h Psi) + sum_{F_u^0} <v, [Psi.n]>.

    Returned with rows indexed by ``Wh`` so that it is directly comparable to
    ``assemble_B(wh, scalar).T``.  The identity holds on rows of scalar DOFs
    that vanish on the boundary.
    """
    _check_pair(wh, scalar)
    mesh = wh.mesh
    shape = (wh.n_dofs, scalar.n_dofs)

    div = np.einsum("sfvd,svd->sf", wh.vector_basis, mesh.grad_lambda)  # constant per sub
    # integral of a barycentric coordinate over a triangle is area / 3
    vol = -div[:, :, None] * (mesh.sub_area[:, None, None] / 3.0) * np.ones((1, 1, 3))
    Bs = _scatter(wh.cell_dofs, scalar.cell_dofs, vol, shape)

    edges = mesh.edges_of_kind(EdgeKind.PRIMAL_INTERIOR)
    rule = edge_rule(scalar.degree + 1)
    x = _edge_points(mesh, edges, rule)
    n = mesh.edge_normal[edges]
    sigma = np.einsum("ed,ed->e", n, mesh.edge_plus_normal[edges])
    tp, tm = mesh.edge_subs[edges, 0], mesh.edge_subs[edges, 1]
    lam_p = mesh.barycentric(tp, x)
    wl = rule.weights * mesh.edge_length[edges][:, None]
    for sub, sgn in ((tp, 1.0), (tm, -1.0)):
        lam = mesh.barycentric(sub, x)
        psi = np.einsum("eqv,efvd->eqfd", lam, _vector_nodal(wh, sub))
        psi_n = np.einsum("eqfd,ed->eqf", psi, n)
        local = np.einsum("eq,eqf,eqi->efi", wl, psi_n, lam_p) * (sgn * sigma)[:, None, None]
        Bs = Bs + _scatter(wh.cell_dofs[sub], scalar.cell_dofs[tp], local, shape)
    return Bs.tocsr()


def _check_degree(quad_degree):
    if quad_degree < MIN_QUAD_DEGREE:
        raise ValueError(f"quadrature degree {quad_degree} below the minimum {MIN_QUAD_DEGREE}")


def assemble_R(wh: DofSpace, scalar: DofSpace, b: ConvectionField, quad_degree: int = DATA_QUAD_DEGREE):
    """R_h(Psi, v) = (b . Psi, v).  R_h^* is its transpose."""
    _check_pair(wh, scalar)
    _check_degree(quad_degree)
    mesh = wh.mesh
    rule = triangle_rule(quad_degree)
    x = mesh.map_points(np.arange(mesh.n_subs), rule.points)  # (nS, nq, 2)
    bx, by = b(x[..., 0], x[..., 1])
    bvec = np.stack([bx, by], axis=-1)
    psi = np.einsum("qv,sfvd->sqfd", rule.points, wh.vector_basis)
    b_psi = np.einsum("sqd,sqfd->sqf", bvec, psi)
    local = np.einsum("q,qi,sqf->sif", rule.weights, rule.points, b_psi) * mesh.sub_area[:, None, None]
    return _scatter(scalar.cell_dofs, wh.cell_dofs, local, (scalar.n_dofs, wh.n_dofs))


def assemble_load(space: DofSpace, f, quad_degree: int = DATA_QUAD_DEGREE) -> np.ndarray:
    """Load vector (f, v_i) for a scalar space."""
    if not space.is_scalar:
        raise ValueError("load vectors are assembled on scalar spaces")
    mesh = space.mesh
    rule = triangle_rule(quad_degree)
    x = mesh.map_points(np.arange(mesh.n_subs), rule.points)
    fq = np.broadcast_to(f(x[..., 0], x[..., 1]), x.shape[:2])
    local = np.einsum("q,qi,sq->si", rule.weights, rule.points, fq) * mesh.sub_area[:, None]
    return np.bincount(space.cell_dofs.ravel(), weights=local.ravel(), minlength=space.n_dofs)


def dump_matrix(A, path) -> None:
    """Coordinate text dump: ``row col value`` per line, 17 significant digits."""
    coo = sp.coo_matrix(A)
    order = np.lexsort((coo.col, coo.row))
    lines = [f"{r} {c} {v:.17g}" for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order])]
    Path(path).write_text(f"% {A.shape[0]} {A.shape[1]}\n" + "\n".join(lines) + "\n")
