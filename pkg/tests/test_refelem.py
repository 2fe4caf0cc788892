"""Reference-interval machinery: nodes, derivatives, weights, evaluation."""

import math

import numpy as np
import pytest

from fusesem.refelem import (
    NodeKind,
    NodeSet,
    ReferenceElement,
    build_node_set,
    evaluate_lagrange,
    gauss_legendre_nodes,
    gauss_legendre_weights,
    interpolatory_weights,
    lagrange_diff_matrix,
)

ALL_KINDS = list(NodeKind)


def fsum_matvec(mat, vec):
    """Compensated matrix-vector product: measures the stored matrix, not
    the accumulation order of a BLAS kernel."""
    return np.array([math.fsum(row * vec) for row in mat])


class TestGaussNodes:
    def test_single_node_is_origin(self):
        assert gauss_legendre_nodes(1) == pytest.approx([0.0], abs=1e-15)

    def test_two_nodes_table_values(self):
        # interior nodes of the degree-3 stabilising set
        assert gauss_legendre_nodes(2) == pytest.approx(
            [-np.sqrt(1.0 / 3.0), np.sqrt(1.0 / 3.0)], abs=1e-15
        )

    def test_three_nodes_table_values(self):
        assert gauss_legendre_nodes(3) == pytest.approx(
            [-np.sqrt(3.0 / 5.0), 0.0, np.sqrt(3.0 / 5.0)], abs=1e-15
        )

    @pytest.mark.parametrize("n", range(1, 20))
    def test_matches_numpy_leggauss(self, n):
        x, w = gauss_legendre_weights(n)
        xr, wr = np.polynomial.legendre.leggauss(n)
        assert x == pytest.approx(xr, abs=1e-14)
        assert w == pytest.approx(wr, abs=1e-14)

    @pytest.mark.parametrize("n", range(1, 21))
    def test_legendre_residual_small(self, n):
        x = np.asarray(gauss_legendre_nodes(n), dtype=np.longdouble)
        p_prev, p = np.ones_like(x), x.copy()
        if n == 1:
            p = x
        for k in range(1, n):
            p, p_prev = ((2 * k + 1) * x * p - k * p_prev) / (k + 1), p
        assert np.max(np.abs(p)) <= 1e-14

    def test_rejects_nonpositive_count(self):
        with pytest.raises(ValueError):
            gauss_legendre_nodes(0)


class TestNodeSets:
    def test_degree2_is_minus1_0_1(self):
        ns = build_node_set(NodeKind.GAUSS_LEGENDRE_ENDPOINTS, 2)
        assert ns.coords == pytest.approx([-1.0, 0.0, 1.0], abs=0)

    def test_degree3_table_values(self):
        ns = build_node_set(NodeKind.GAUSS_LEGENDRE_ENDPOINTS, 3)
        s = np.sqrt(1.0 / 3.0)
        assert ns.coords == pytest.approx([-1.0, -s, s, 1.0], abs=1e-15)

    def test_uniform_degree4(self):
        ns = build_node_set(NodeKind.UNIFORM, 4)
        assert ns.coords == pytest.approx([-1.0, -0.5, 0.0, 0.5, 1.0], abs=0)

    def test_degree1_degenerates_to_endpoints(self):
        ns = build_node_set(NodeKind.GAUSS_LEGENDRE_ENDPOINTS, 1)
        assert ns.coords == pytest.approx([-1.0, 1.0], abs=0)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    @pytest.mark.parametrize("p", [1, 2, 3, 5, 8, 13, 20])
    def test_invariants(self, kind, p):
        ns = build_node_set(kind, p)
        c = ns.coords
        assert c[0] == -1.0 and c[-1] == 1.0
        assert np.all(np.diff(c) > 0)
        assert np.max(np.abs(c + c[::-1])) <= 1e-14

    @pytest.mark.parametrize("p", range(2, 21))
    def test_gle_interior_nodes_are_legendre_roots(self, p):
        ns = build_node_set(NodeKind.GAUSS_LEGENDRE_ENDPOINTS, p)
        interior = np.asarray(ns.coords[1:-1], dtype=np.longdouble)
        n = p - 1
        p_prev, poly = np.ones_like(interior), interior.copy()
        for k in range(1, n):
            poly, p_prev = ((2 * k + 1) * interior * poly - k * p_prev) / (k + 1), poly
        if n == 1:
            poly = interior
        assert np.max(np.abs(poly)) <= 1e-13

    def test_validation_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            NodeSet(degree=2, kind=NodeKind.UNIFORM, coords=np.array([-1.0, 0.3, 1.0]))


class TestDiffMatrix:
    def test_degree1_slope(self):
        d = lagrange_diff_matrix(build_node_set(NodeKind.UNIFORM, 1))
        assert d == pytest.approx([[-0.5, 0.5], [-0.5, 0.5]], abs=0)

    def test_degree2_middle_row(self):
        # differentiating the three Lagrange polynomials of {-1, 0, 1}
        # analytically at 0 gives (-1/2, 0, 1/2)
        d = lagrange_diff_matrix(build_node_set(NodeKind.UNIFORM, 2))
        assert d[1] == pytest.approx([-0.5, 0.0, 0.5], abs=1e-15)

    def test_degree2_last_row_upwind_stencil(self):
        # the (1/2, -2, 3/2) end-point stencil of the upwind scheme
        d = lagrange_diff_matrix(build_node_set(NodeKind.UNIFORM, 2))
        assert d[2] == pytest.approx([0.5, -2.0, 1.5], abs=1e-15)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    @pytest.mark.parametrize("p", list(range(1, 21)))
    def test_monomial_exactness_sweep(self, kind, p):
        ref = ReferenceElement.build(kind, p)
        x = ref.nodes.coords
        for k in range(p + 1):
            got = fsum_matvec(ref.diff_matrix, x**k)
            expect = k * x ** (k - 1) if k >= 1 else np.zeros_like(x)
            assert np.max(np.abs(got - expect)) <= 1e-10

    @pytest.mark.parametrize("p", [2, 3, 4, 8, 12])
    def test_row_sums_vanish(self, p):
        ref = ReferenceElement.build(NodeKind.GAUSS_LEGENDRE_ENDPOINTS, p)
        sums = [math.fsum(row) for row in ref.diff_matrix]
        assert np.max(np.abs(sums)) <= 1e-13

    @pytest.mark.parametrize("kind", ALL_KINDS)
    @pytest.mark.parametrize("p", [2, 5, 9, 14, 20])
    def test_centro_antisymmetry(self, kind, p):
        d = ReferenceElement.build(kind, p).diff_matrix
        assert np.max(np.abs(d + d[::-1, ::-1])) <= 1e-12


class TestWeights:
    def test_simpson_weights(self):
        w = interpolatory_weights(build_node_set(NodeKind.UNIFORM, 2))
        assert w == pytest.approx([1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0], abs=1e-15)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    @pytest.mark.parametrize("p", range(1, 21))
    def test_weights_sum_to_two(self, kind, p):
        w = interpolatory_weights(build_node_set(kind, p))
        assert math.fsum(w) == pytest.approx(2.0, abs=1e-13)

    def test_gle_degree3_against_bruteforce_integration(self):
        # independent oracle: fit each Lagrange basis exactly and integrate
        ns = build_node_set(NodeKind.GAUSS_LEGENDRE_ENDPOINTS, 3)
        expect = []
        for i in range(4):
            vals = np.zeros(4)
            vals[i] = 1.0
            poly = np.polynomial.Polynomial.fit(ns.coords, vals, deg=3)
            expect.append(poly.integ()(1.0) - poly.integ()(-1.0))
        w = interpolatory_weights(ns)
        assert w == pytest.approx(expect, abs=1e-13)
        # interior nodes already form a full Gauss rule, so endpoints get zero
        assert w == pytest.approx([0.0, 1.0, 1.0, 0.0], abs=1e-13)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    @pytest.mark.parametrize("p", range(1, 16))
    def test_monomial_integration_exactness(self, kind, p):
        ns = build_node_set(kind, p)
        w = interpolatory_weights(ns)
        for k in range(p + 1):
            exact = (1.0 - (-1.0) ** (k + 1)) / (k + 1)
            assert w @ ns.coords**k == pytest.approx(exact, abs=1e-12)

    def test_interior_gauss_weights_exposed(self):
        ref = ReferenceElement.build(NodeKind.GAUSS_LEGENDRE_ENDPOINTS, 3)
        assert ref.interior_gauss_weights() == pytest.approx([1.0, 1.0], abs=1e-14)


class TestEvaluation:
    def test_reproduces_quadratic(self):
        ns = build_node_set(NodeKind.GAUSS_LEGENDRE_ENDPOINTS, 2)
        coeffs = ns.coords**2
        assert evaluate_lagrange(ns, coeffs, 0.3) == pytest.approx(0.09, abs=1e-14)

    def test_exact_at_nodes(self):
        ns = build_node_set(NodeKind.GAUSS_LEGENDRE_ENDPOINTS, 3)
        coeffs = np.array([2.0, -1.0, 0.5, 7.0])
        assert evaluate_lagrange(ns, coeffs, ns.coords[1]) == coeffs[1]

    def test_exponential_interpolation_error(self):
        ns = build_node_set(NodeKind.GAUSS_LEGENDRE_ENDPOINTS, 6)
        coeffs = np.exp(ns.coords)
        got = evaluate_lagrange(ns, coeffs, 0.5)
        assert abs(got - np.exp(0.5)) <= 1e-6
