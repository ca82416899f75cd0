"""Static condensation, boundary conditions and the linear solve.

The flux unknowns are eliminated with the block-diagonal mass matrix (one
block per macro triangle), leaving

    A = -mu * Lap + C_theta,
    Lap = -B M^-1 B^T,
    C_theta = -theta B M^-1 R^T + (1 - theta) R M^-1 B^T.

theta = 1/2 gives the skew-symmetric convection matrix.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import forms
from .mesh import StaggeredMesh, build_structured
from .spaces import DofSpace, EmbeddingMatrix, SpaceKind, build_embedding, build_space, interpolate

logger = logging.getLogger(__name__)

WH_BLOCK = 12  # flux DOFs per macro triangle for k = 1


class SingularSystemError(RuntimeError):
    """Raised when the sparse factorisation hits a zero pivot."""


class NotSPDError(ValueError):
    pass


def block_inverse(M, block_size: int = WH_BLOCK) -> sp.bsr_matrix:
    """Inverse of a block-diagonal SPD matrix, factorising each block separately."""
    coo = sp.coo_matrix(M)
    n = coo.shape[0]
    if n % block_size:
        raise ValueError("matrix size is not a multiple of the block size")
    rb, cb = coo.row // block_size, coo.col // block_size
    if np.any(rb != cb):
        raise ValueError("matrix is not block diagonal")
    nb = n // block_size
    blocks = np.zeros((nb, block_size, block_size))
    np.add.at(blocks, (rb, coo.row % block_size, coo.col % block_size), coo.data)
    try:
        L = np.linalg.cholesky(blocks)
    except np.linalg.LinAlgError as exc:
        raise NotSPDError("mass matrix block is not symmetric positive definite") from exc
    eye = np.broadcast_to(np.eye(block_size), blocks.shape)
    Linv = np.linalg.solve(L, eye)
    inv = np.einsum("bki,bkj->bij", Linv, Linv)
    return sp.bsr_matrix((inv, np.arange(nb), np.arange(nb + 1)), shape=(n, n))


@dataclass(frozen=True, eq=False)
class CondensedOperator:
    A: sp.csr_matrix
    laplacian: sp.csr_matrix
    convection: sp.csr_matrix
    mu: float
    theta: float
    B: sp.csr_matrix
    R: sp.csr_matrix
    Minv: sp.spmatrix
    space: DofSpace | None = None


def condense(M, B, R, mu: float, theta: float = 0.5, Minv=None, space=None) -> CondensedOperator:
    if mu <= 0:
        raise ValueError("diffusivity must be positive")
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    if B.shape != R.shape or B.shape[1] != M.shape[0]:
        raise ValueError("incompatible matrix shapes")
    if Minv is None:
        Minv = block_inverse(M)
    BM = sp.csr_matrix(B @ Minv)
    RM = sp.csr_matrix(R @ Minv)
    lap = -sp.csr_matrix(BM @ B.T)
    conv = sp.csr_matrix(-theta * (BM @ R.T) + (1.0 - theta) * (RM @ B.T))
    A = sp.csr_matrix(-mu * lap + conv)
    return CondensedOperator(A, lap, conv, float(mu), float(theta), sp.csr_matrix(B), sp.csr_matrix(R), Minv, space)


def embed_system(op: CondensedOperator, emb: EmbeddingMatrix | sp.spmatrix) -> CondensedOperator:
    """Restrict an operator on U^h to Ũ^h by congruence with P."""
    P = emb.P if isinstance(emb, EmbeddingMatrix) else sp.csr_matrix(emb)
    space = emb.source if isinstance(emb, EmbeddingMatrix) else None
    if P.shape[1] != op.A.shape[0]:
        raise ValueError(f"embedding of shape {P.shape} does not fit operator of size {op.A.shape[0]}")
    PT = P.T.tocsr()

    def cong(X):
        return sp.csr_matrix(P @ X @ PT)

    return replace(
        op,
        A=cong(op.A),
        laplacian=cong(op.laplacian),
        convection=cong(op.convection),
        B=sp.csr_matrix(P @ op.B),
        R=sp.csr_matrix(P @ op.R),
        space=space,
    )


@dataclass(frozen=True, eq=False)
class ConstrainedSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    load: np.ndarray
    boundary_dofs: np.ndarray
    boundary_values: np.ndarray
    operator: CondensedOperator


def apply_dirichlet(op: CondensedOperator, rhs, g=None, space: DofSpace | None = None) -> ConstrainedSystem:
    """Fix boundary DOFs to the nodal interpolant of ``g`` (zero if None).

    Their coupling is moved to the right-hand side and the constrained rows
    and columns are replaced by the identity.
    """
    space = space or op.space
    if space is None:
        raise ValueError("a scalar space is needed to locate the boundary DOFs")
    bnd = space.boundary_dofs
    gb = np.zeros(len(bnd))
    if g is not None:
        x, y = space.dof_points[bnd].T
        gb = np.asarray(np.broadcast_to(g(x, y), x.shape), dtype=float)
        if not np.all(np.isfinite(gb)):
            raise ValueError("boundary data is not finite on the boundary")
    rhs = np.asarray(rhs, dtype=float)
    n = op.A.shape[0]
    full = np.zeros(n)
    full[bnd] = gb
    b = rhs - op.A @ full
    b[bnd] = gb
    keep = np.ones(n)
    keep[bnd] = 0.0
    D = sp.diags(keep)
    mat = sp.csr_matrix(D @ op.A @ D + sp.diags(1.0 - keep))
    return ConstrainedSystem(mat, b, rhs, bnd, gb, op)


@dataclass(frozen=True, eq=False)
class SolveResult:
    u: np.ndarray
    w: np.ndarray
    p: np.ndarray
    z: np.ndarray
    residual_norm: float
    mu: float
    theta: float
    space: DofSpace | None = None
    wspace: DofSpace | None = None
    load: np.ndarray | None = field(default=None, repr=False)
    condition_estimate: float = float("nan")

    def energy(self, mass) -> tuple[float, float]:
        """(mu * ||z||^2, (f, u)) for the energy identity."""
        return self.mu * float(self.z @ (mass @ self.z)), float(self.load @ self.u)


def solve(system: ConstrainedSystem, wspace: DofSpace | None = None) -> SolveResult:
    op = system.operator
    A = sp.csc_matrix(system.matrix)
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise SingularSystemError(f"sparse LU failed: {exc}") from exc
    u = lu.solve(system.rhs)
    if not np.all(np.isfinite(u)):
        raise SingularSystemError("non-finite solution; factorisation is numerically singular")
    du = np.abs(lu.U.diagonal())
    cond = float(du.max() / du.min()) if du.min() > 0 else float("inf")
    scale = np.linalg.norm(system.rhs)
    res = float(np.linalg.norm(A @ u - system.rhs) / (scale if scale > 0 else 1.0))

    mu, theta = op.mu, op.theta
    Btu = op.B.T @ u
    Rtu = op.R.T @ u
    z = op.Minv @ Btu
    p = op.Minv @ Rtu
    w = np.sqrt(mu) * z - theta / np.sqrt(mu) * p
    return SolveResult(u, w, p, z, res, mu, theta, op.space, wspace, system.load, cond)


def monolithic_solve(M, B, R, space: DofSpace, mu: float, theta: float, load, g=None):
    """Solve the uncondensed three-field system for (u, w, p).

    Used as an independent check of the condensed route.
    """
    nS, nW = B.shape
    sq = np.sqrt(mu)
    bnd = space.boundary_dofs
    keep = np.ones(nS)
    keep[bnd] = 0.0
    D = sp.diags(keep)
    # boundary rows of the first block pin u to g
    top = [sp.diags(1.0 - keep), D @ (sq * B + (1 - theta) / sq * R), D @ ((1 - theta) * theta / mu * R)]
    mid = [sq * B.T, -M, -theta / sq * M]
    bot = [R.T, sp.csr_matrix((nW, nW)), -M]
    K = sp.bmat([top, mid, bot], format="csc")
    rhs = np.zeros(nS + 2 * nW)
    rhs[:nS] = np.asarray(load) * keep
    if g is not None:
        x, y = space.dof_points[bnd].T
        rhs[bnd] = g(x, y)
    x = spla.spsolve(K, rhs)
    return x[:nS], x[nS : nS + nW], x[nS + nW :]


class Discretization:
    """Mesh, spaces and theta/mu-independent matrices for one refinement level.

    Parameters
    ----------
    mesh_or_N : StaggeredMesh or int
    b : ConvectionField
    quad_degree : int
        Exactness degree of the rule used for ``R`` and the load vector.
    """

    def __init__(self, mesh_or_N, b: forms.ConvectionField, quad_degree: int = forms.DATA_QUAD_DEGREE, degree: int = 1):
        mesh = build_structured(mesh_or_N) if not isinstance(mesh_or_N, StaggeredMesh) else mesh_or_N
        self.mesh = mesh
        self.b = b
        self.quad_degree = quad_degree
        self.uh = build_space(mesh, SpaceKind.UH, degree)
        self.uh_tilde = build_space(mesh, SpaceKind.UH_TILDE, degree)
        self.wh = build_space(mesh, SpaceKind.WH, degree)
        self.embedding = build_embedding(self.uh, self.uh_tilde)
        self.M = forms.assemble_mass(self.wh)
        self.Minv = block_inverse(self.M)
        self.B = forms.assemble_B(self.wh, self.uh)
        self.R = forms.assemble_R(self.wh, self.uh, b, quad_degree)

    def scalar_space(self, method: str) -> DofSpace:
        return self.uh if _method(method) == "SDG" else self.uh_tilde

    def operator(self, method: str, mu: float, theta: float = 0.5) -> CondensedOperator:
        op = condense(self.M, self.B, self.R, mu, theta, Minv=self.Minv, space=self.uh)
        if _method(method) == "ESDG":
            op = embed_system(op, self.embedding)
        return op

    def load(self, method: str, f) -> np.ndarray:
        fh = forms.assemble_load(self.uh, f, self.quad_degree)
        if _method(method) == "ESDG":
            fh = self.embedding.P @ fh
        return fh

    def solve(self, method: str, mu: float, f, g=None, theta: float = 0.5) -> SolveResult:
        op = self.operator(method, mu, theta)
        system = apply_dirichlet(op, self.load(method, f), g)
        result = solve(system, self.wh)
        logger.debug(
            "N=%s %s mu=%g theta=%g: residual %.2e, cond~%.2e",
            self.mesh.N, method, mu, theta, result.residual_norm, result.condition_estimate,
        )
        return result

    def interpolate(self, method: str, func) -> np.ndarray:
        return interpolate(self.scalar_space(method), func)


def _method(method: str) -> str:
    m = method.upper()
    if m not in ("SDG", "ESDG"):
        raise ValueError(f"unknown method {method!r}; expected SDG or ESDG")
    return m


def solve_problem(problem, N: int, method: str = "ESDG", theta: float = 0.5, quad_degree: int = forms.DATA_QUAD_DEGREE):
    """One-shot solve of a manufactured problem on the structured mesh."""
    disc = Discretization(N, problem.b, quad_degree)
    return disc, disc.solve(method, problem.mu, problem.f, problem.g, theta)
