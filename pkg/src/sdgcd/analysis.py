"""Errors, discrete norms and convergence tables."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .forms import DATA_QUAD_DEGREE
from .mesh import EdgeKind
from .quadrature import edge_rule, triangle_rule
from .spaces import DofSpace, eval_scalar, eval_scalar_grad, eval_vector, eval_vector_div

# two degrees above the data rule used in assembly
ERROR_QUAD_DEGREE = DATA_QUAD_DEGREE + 2


def _quad_points(mesh, degree):
    rule = triangle_rule(degree)
    subs = np.arange(mesh.n_subs)
    x = mesh.map_points(subs, rule.points)
    return subs, rule, x


def l2_norm_scalar(space: DofSpace, coeffs, func=None, degree: int = ERROR_QUAD_DEGREE) -> float:
    """||v_h - func||_{0, Omega} (``func`` may be None)."""
    subs, rule, x = _quad_points(space.mesh, degree)
    diff = eval_scalar(space, coeffs, subs, rule.points)
    if func is not None:
        diff = diff - func(x[..., 0], x[..., 1])
    return math.sqrt(float(np.sum(space.mesh.sub_area[:, None] * rule.weights * diff**2)))


def l2_norm_vector(wspace: DofSpace, coeffs, func=None, degree: int = ERROR_QUAD_DEGREE) -> float:
    subs, rule, x = _quad_points(wspace.mesh, degree)
    diff = eval_vector(wspace, coeffs, subs, rule.points)
    if func is not None:
        fx, fy = func(x[..., 0], x[..., 1])
        diff = diff - np.stack([np.broadcast_to(fx, x.shape[:2]), np.broadcast_to(fy, x.shape[:2])], axis=-1)
    return math.sqrt(float(np.sum(wspace.mesh.sub_area[:, None] * rule.weights * np.sum(diff**2, axis=-1))))


def l2_error_potential(result, u_exact, degree: int = ERROR_QUAD_DEGREE) -> float:
    return l2_norm_scalar(result.space, result.u, u_exact, degree)


def l2_error_flux(result, grad_u_exact, degree: int = ERROR_QUAD_DEGREE) -> float:
    return l2_norm_vector(result.wspace, result.z, grad_u_exact, degree)


def flux_norm(result, degree: int = 2) -> float:
    return l2_norm_vector(result.wspace, result.z, None, degree)


def _edge_traces_scalar(space, coeffs, edges, side, rule):
    mesh = space.mesh
    subs = mesh.edge_subs[edges, side]
    p0 = mesh.vertices[mesh.edge_vertices[edges, 0]]
    p1 = mesh.vertices[mesh.edge_vertices[edges, 1]]
    x = np.einsum("qk,ekd->eqd", rule.points, np.stack([p0, p1], axis=1))
    lam = mesh.barycentric(subs, x)
    local = np.asarray(coeffs)[space.cell_dofs[subs]]
    return np.einsum("eqi,ei->eq", lam, local)


def _edge_traces_normal(wspace, coeffs, edges, side, rule):
    mesh = wspace.mesh
    subs = mesh.edge_subs[edges, side]
    p0 = mesh.vertices[mesh.edge_vertices[edges, 0]]
    p1 = mesh.vertices[mesh.edge_vertices[edges, 1]]
    x = np.einsum("qk,ekd->eqd", rule.points, np.stack([p0, p1], axis=1))
    lam = mesh.barycentric(subs, x)
    local = np.asarray(coeffs)[wspace.cell_dofs[subs]]
    nodal = np.einsum("ef,efvd->evd", local, wspace.vector_basis[subs])
    vals = np.einsum("eqv,evd->eqd", lam, nodal)
    return np.einsum("eqd,ed->eq", vals, mesh.edge_normal[edges])


def _edge_sum(mesh, edges, values, rule, power):
    h = mesh.edge_length[edges]
    return float(np.sum(h ** (power + 1) * np.sum(rule.weights * values**2, axis=1)))


def discrete_norms(coeffs, space: DofSpace) -> dict[str, float]:
    """Discrete norms.

    Scalar spaces return ``{"X", "Z"}``:
        X^2 = ||v||^2 + sum_{F_u^0} h_e ||v||_e^2
        Z^2 = ||grad_h v||^2 + sum_{F_p} h_e^-1 ||[v]||_e^2
    ``Wh`` returns ``{"X'", "Z'"}``:
        X'^2 = ||Psi||^2 + sum_{F_p} h_e ||Psi.n||_e^2
        Z'^2 = ||div_h Psi||^2 + sum_{F_u^0} h_e^-1 ||[Psi.n]||_e^2
    """
    mesh = space.mesh
    rule = edge_rule(2)
    interior_primal = mesh.edges_of_kind(EdgeKind.PRIMAL_INTERIOR)
    dual = mesh.edges_of_kind(EdgeKind.DUAL)
    area = mesh.sub_area
    subs = np.arange(mesh.n_subs)
    if space.is_scalar:
        l2 = l2_norm_scalar(space, coeffs, degree=2) ** 2
        grad = eval_scalar_grad(space, coeffs, subs)
        h1 = float(np.sum(area * np.sum(grad**2, axis=1)))
        trace = _edge_traces_scalar(space, coeffs, interior_primal, 0, rule)
        sgn = np.einsum("ed,ed->e", mesh.edge_normal[dual], mesh.edge_plus_normal[dual])[:, None]
        jump = sgn * (_edge_traces_scalar(space, coeffs, dual, 0, rule) - _edge_traces_scalar(space, coeffs, dual, 1, rule))
        return {
            "X": math.sqrt(l2 + _edge_sum(mesh, interior_primal, trace, rule, 1)),
            "Z": math.sqrt(h1 + _edge_sum(mesh, dual, jump, rule, -1)),
        }
    l2 = l2_norm_vector(space, coeffs, degree=2) ** 2
    div = eval_vector_div(space, coeffs, subs)
    hdiv = float(np.sum(area * div**2))
    trace = _edge_traces_normal(space, coeffs, dual, 0, rule)
    sgn = np.einsum("ed,ed->e", mesh.edge_normal[interior_primal], mesh.edge_plus_normal[interior_primal])[:, None]
    jump = sgn * (
        _edge_traces_normal(space, coeffs, interior_primal, 0, rule)
        - _edge_traces_normal(space, coeffs, interior_primal, 1, rule)
    )
    return {
        "X'": math.sqrt(l2 + _edge_sum(mesh, dual, trace, rule, 1)),
        "Z'": math.sqrt(hdiv + _edge_sum(mesh, interior_primal, jump, rule, -1)),
    }


def observed_order(error_coarse: float, error_fine: float) -> float:
    """log2 ratio of errors on consecutive (halved) meshes."""
    if not (error_coarse > 0 and error_fine > 0):
        raise ValueError("errors must be positive")
    return math.log2(error_coarse / error_fine)


@dataclass
class ConvergenceRow:
    N: int
    error_u: float
    error_z: float
    order_u: float | None = None
    order_z: float | None = None
    note: str = ""


@dataclass
class ConvergenceTable:
    method: str
    mu: float
    theta: float = 0.5
    rows: list[ConvergenceRow] = field(default_factory=list)

    def add(self, N: int, error_u: float, error_z: float) -> ConvergenceRow:
        row = ConvergenceRow(N, error_u, error_z)
        prev = next((r for r in reversed(self.rows) if not r.note), None)
        if prev is not None and prev.N * 2 == N:
            row.order_u = observed_order(prev.error_u, error_u)
            row.order_z = observed_order(prev.error_z, error_z)
        self.rows.append(row)
        return row

    def add_failure(self, N: int, message: str) -> ConvergenceRow:
        row = ConvergenceRow(N, math.nan, math.nan, note=message)
        self.rows.append(row)
        return row

    def row(self, N: int) -> ConvergenceRow:
        return next(r for r in self.rows if r.N == N)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "error_u", "order_u", "error_z", "order_z"])
        for r in self.rows:
            if r.note:
                w.writerow([r.N, r.note, "", "", ""])
                continue
            w.writerow([r.N, _full(r.error_u), _full(r.order_u), _full(r.error_z), _full(r.order_z)])
        return buf.getvalue()

    def to_markdown(self) -> str:
        lines = [
            f"{self.method}, mu = {self.mu:g}" + (f", theta = {self.theta:g}" if self.theta != 0.5 else ""),
            "",
            "| N | error u | order | error z | order |",
            "|---:|---:|---:|---:|---:|",
        ]
        for r in self.rows:
            if r.note:
                lines.append(f"| {r.N} | {r.note} | | | |")
            else:
                lines.append(
                    f"| {r.N} | {r.error_u:.2e} | {_short(r.order_u)} | {r.error_z:.2e} | {_short(r.order_z)} |"
                )
        return "\n".join(lines) + "\n"


def _full(v):
    return "" if v is None else repr(float(v))


def _short(v):
    return "--" if v is None else f"{v:.2f}"


def locate_points(mesh, points, tol: float = 1e-12) -> np.ndarray:
    """Sub-triangle containing each point; ties (points on edges) go to the
    lowest-indexed sub, i.e. the tau+ side."""
    from scipy.spatial import cKDTree

    pts = np.asarray(points, dtype=float)
    centers = mesh.vertices[mesh.sub_triangles].mean(axis=1)
    k = min(16, mesh.n_subs)
    _, cand = cKDTree(centers).query(pts, k=k)
    cand = np.asarray(cand).reshape(len(pts), k)
    lam = mesh.barycentric(cand.ravel(), np.repeat(pts, k, axis=0)).reshape(len(pts), k, 3)
    inside = np.all(lam >= -tol, axis=2)
    owner = np.where(inside, cand, np.iinfo(np.int64).max).min(axis=1)
    for i in np.flatnonzero(owner == np.iinfo(np.int64).max):
        lam_all = mesh.barycentric(np.arange(mesh.n_subs), np.broadcast_to(pts[i], (mesh.n_subs, 2)))
        hit = np.flatnonzero(np.all(lam_all >= -tol, axis=1))
        if len(hit) == 0:
            raise ValueError(f"point {pts[i]} lies outside the mesh")
        owner[i] = hit.min()
    return owner


def sample_field(result, n: int = 101) -> np.ndarray:
    """Sample u_h and z_h on a uniform n x n grid of the unit square.

    Returns an array with columns ``x, y, u, zx, zy``.
    """
    g = np.linspace(0.0, 1.0, n)
    X, Y = np.meshgrid(g, g)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    mesh = result.space.mesh
    subs = locate_points(mesh, pts)
    lam = mesh.barycentric(subs, pts)
    u = np.sum(result.u[result.space.cell_dofs[subs]] * lam, axis=1)
    local = result.z[result.wspace.cell_dofs[subs]]
    nodal = np.einsum("sf,sfvd->svd", local, result.wspace.vector_basis[subs])
    z = np.einsum("sv,svd->sd", lam, nodal)
    return np.column_stack([pts, u, z])


def write_samples(samples: np.ndarray, path) -> None:
    np.savetxt(path, samples, fmt="%.17g", header="x y u zx zy")
