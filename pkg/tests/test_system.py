import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from sdgcd import Discretization, make_problem
from sdgcd.analysis import l2_error_potential
from sdgcd.forms import constant_field, zero_field
from sdgcd.system import (
    ConstrainedSystem,
    NotSPDError,
    SingularSystemError,
    apply_dirichlet,
    block_inverse,
    condense,
    monolithic_solve,
    solve,
    solve_problem,
)


@pytest.fixture(scope="module")
def disc2():
    return Discretization(2, make_problem(2, 1.0).b)


def test_block_inverse(disc2):
    I = (disc2.M @ disc2.Minv).toarray()
    assert np.allclose(I, np.eye(disc2.M.shape[0]), atol=1e-12)
    with pytest.raises(ValueError):
        block_inverse(sp.csr_matrix(np.ones((24, 24))))
    with pytest.raises(NotSPDError):
        block_inverse(-sp.identity(12, format="csr"))


def test_condense_validation(disc2):
    with pytest.raises(ValueError):
        condense(disc2.M, disc2.B, disc2.R, mu=0.0)
    with pytest.raises(ValueError):
        condense(disc2.M, disc2.B, disc2.R, mu=1.0, theta=1.5)


@pytest.mark.parametrize("method", ["SDG", "ESDG"])
def test_operator_symmetries(disc2, method):
    op = disc2.operator(method, 0.1, 0.5)
    assert abs(op.convection + op.convection.T).max() < 1e-12
    assert abs(op.laplacian - op.laplacian.T).max() < 1e-12


def test_zero_field_operator_is_symmetric_diffusion():
    disc = Discretization(2, zero_field())
    op = disc.operator("SDG", 0.7)
    ref = 0.7 * disc.B @ disc.Minv @ disc.B.T
    assert abs(op.A - ref).max() < 1e-12
    free = disc.uh.free_dofs
    sysm = apply_dirichlet(op, np.zeros(disc.uh.n_dofs)).matrix.toarray()[np.ix_(free, free)]
    assert np.linalg.eigvalsh(sysm).min() > 0


def test_esdg_dimension():
    disc = Discretization(4, zero_field())
    assert disc.operator("ESDG", 1.0).A.shape == (121, 121)


def test_dirichlet_boundary_values(disc2):
    prob = make_problem(2, 1.0)
    r = disc2.solve("SDG", 1.0, prob.f, prob.g)
    bnd = disc2.uh.boundary_dofs
    x, y = disc2.uh.dof_points[bnd].T
    assert np.abs(r.u[bnd] - np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y)).max() < 1e-14
    hom = make_problem(3, 1.0)
    r = disc2.solve("ESDG", 1.0, hom.f, hom.g)
    assert np.all(r.u[disc2.uh_tilde.boundary_dofs] == 0.0)


def test_homogeneous_problem_has_zero_solution(disc2):
    r = disc2.solve("SDG", 1.0, lambda x, y: 0.0 * x)
    assert not np.any(r.u) and not np.any(r.z)


@pytest.mark.parametrize("mu", [1.0, 1e-3])
def test_flux_recovery_identity(disc2, mu):
    prob = make_problem(3, mu)
    r = disc2.solve("ESDG", mu, prob.f)
    assert np.abs(r.z - (r.w / np.sqrt(mu) + r.p / (2 * mu))).max() < 1e-12 * max(1.0, np.abs(r.z).max())
    assert r.residual_norm < 1e-12


@pytest.mark.parametrize("theta", [0.0, 0.3, 0.5, 1.0])
def test_condensed_matches_monolithic_with_convection(theta):
    disc = Discretization(2, constant_field(1.0, -2.0))
    prob = make_problem(2, 1.0)
    mu = 0.05
    r = disc.solve("SDG", mu, prob.f, prob.g, theta)
    u, w, p = monolithic_solve(disc.M, disc.B, disc.R, disc.uh, mu, theta, disc.load("SDG", prob.f), prob.g)
    for a, b in ((u, r.u), (w, r.w), (p, r.p)):
        assert np.abs(a - b).max() < 1e-9 * max(1.0, np.abs(b).max())


def test_singular_system_raises(disc2):
    op = disc2.operator("SDG", 1.0)
    n = op.A.shape[0]
    bad = ConstrainedSystem(sp.csr_matrix((n, n)), np.ones(n), np.ones(n), np.array([], int), np.array([]), op)
    with pytest.raises(SingularSystemError):
        solve(bad)


def test_method_name_checked(disc2):
    with pytest.raises(ValueError):
        disc2.operator("CG", 1.0)


def test_exp2_esdg_n16_error_near_table():
    _, r = solve_problem(make_problem(2, 1.0), 16, "ESDG")
    err = l2_error_potential(r, make_problem(2, 1.0).u_exact)
    assert 1.06e-2 / 2 < err < 1.06e-2 * 2


@settings(max_examples=12, deadline=None)
@given(st.sampled_from([2, 4]), st.floats(1e-3, 1.0))
def test_energy_identity_property(N, mu):
    prob = make_problem(3, mu)
    disc = Discretization(N, prob.b)
    for method in ("SDG", "ESDG"):
        lhs, rhs = disc.solve(method, mu, prob.f).energy(disc.M)
        assert abs(lhs - rhs) <= 1e-10 * abs(rhs)
