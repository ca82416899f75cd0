import numpy as np
import pytest

from sdgcd.analysis import l2_norm_vector
from sdgcd.problems import make_problem


def _laplacian_fd(u, x, y, h=1e-3):
    return (u(x + h, y) + u(x - h, y) + u(x, y + h) + u(x, y - h) - 4 * u(x, y)) / h**2


@pytest.mark.parametrize("exp,mu", [(1, 1.0), (2, 1.0), (2, 1e-3), (3, 1e-2)])
def test_source_matches_finite_differences(exp, mu):
    prob = make_problem(exp, mu)
    rng = np.random.default_rng(11)
    x, y = rng.uniform(0.05, 0.95, (2, 200))
    h = 1e-5
    ux = (prob.u_exact(x + h, y) - prob.u_exact(x - h, y)) / (2 * h)
    uy = (prob.u_exact(x, y + h) - prob.u_exact(x, y - h)) / (2 * h)
    bx, by = prob.b(x, y)
    f_fd = -mu * _laplacian_fd(prob.u_exact, x, y) + bx * ux + by * uy
    scale = np.abs(prob.f(x, y)).max()
    assert np.abs(prob.f(x, y) - f_fd).max() < 1e-3 * scale
    gx, gy = prob.grad_u_exact(x, y)
    assert np.allclose(gx, ux, atol=1e-6 * scale) and np.allclose(gy, uy, atol=1e-6 * scale)


def test_boundary_conditions():
    e1, e3 = make_problem(1), make_problem(3, 1.0)
    t = np.linspace(0, 1, 11)
    for p in (e1, e3):
        assert p.homogeneous and p.g is None
        for x, y in ((t, 0 * t), (t, 1 + 0 * t), (0 * t, t), (1 + 0 * t, t)):
            assert np.abs(p.u_exact(x, y)).max() < 1e-12
    e2 = make_problem(2, 1.0)
    assert e2.g(0.25, 0.0) == pytest.approx(1.0)


def test_experiment1_has_unit_size():
    u = make_problem(1).u_exact
    g = np.linspace(0, 1, 201)
    X, Y = np.meshgrid(g, g)
    assert 0.5 < u(X, Y).max() < 1.0


def test_exp3_flux_norm(mesh4):
    from sdgcd.spaces import build_space

    wh = build_space(mesh4, "Wh")
    grad = make_problem(3, 1.0).grad_u_exact
    # the exact field measured against zero
    norm = l2_norm_vector(wh, np.zeros(wh.n_dofs), grad, degree=20)
    assert norm == pytest.approx(np.sqrt(2) * np.pi, rel=1e-10)


def test_bad_arguments():
    with pytest.raises(ValueError):
        make_problem(4)
    with pytest.raises(ValueError):
        make_problem(2)
