import math

import numpy as np
import pytest

from sdgcd.quadrature import QuadratureRule, collapsed_rule, edge_rule, triangle_rule


def monomial_exact(a, b):
    # integral of l1^a l2^b over the reference simplex, normalised by its area
    return 2.0 * math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


@pytest.mark.parametrize("degree", [1, 2, 3, 4, 5, 6, 7, 8, 12])
def test_triangle_rule_exact_on_monomials(degree):
    rule = triangle_rule(degree)
    assert rule.exactness_degree >= degree
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-14)
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            got = np.sum(rule.weights * rule.points[:, 1] ** a * rule.points[:, 2] ** b)
            assert got == pytest.approx(monomial_exact(a, b), rel=1e-13)


def test_collapsed_rule_high_degree():
    rule = collapsed_rule(20)
    got = np.sum(rule.weights * rule.points[:, 1] ** 10 * rule.points[:, 2] ** 10)
    assert got == pytest.approx(monomial_exact(10, 10), rel=1e-12)
    assert np.allclose(rule.points.sum(axis=1), 1.0)


def test_edge_rule():
    rule = edge_rule(3)
    for p in range(6):
        assert np.sum(rule.weights * rule.points[:, 0] ** p) == pytest.approx(1 / (p + 1), rel=1e-14)


def test_rejects_nonpositive_weights():
    with pytest.raises(ValueError):
        QuadratureRule(np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([0.0]), 1)
