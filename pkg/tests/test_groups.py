"""Group and algebra kernel tests: laws, charts, and the ball-power radius."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liemult import (ChartSpec, HeisenbergGroup, InvalidInputError, ParameterError,
                     UnipotentGroup, group_from_config, sample_norm_ball, substream)


def random_algebra(group, rng, size, scale=1.0):
    return rng.standard_normal((size, group.dim)) * scale


class TestHeisenbergLaw:
    def test_worked_product(self, heis2):
        g = heis2.embed([1.0, 0.0], [0.0, 0.0], 0.0)
        h = heis2.embed([0.0, 0.0], [1.0, 0.0], 0.0)
        np.testing.assert_allclose(heis2.mul(g, h), [1.0, 0.0, 1.0, 0.0, 0.5])

    def test_identity_left_right(self, heis2, rng):
        g = random_algebra(heis2, rng, 64)
        e = np.broadcast_to(heis2.identity(), g.shape)
        np.testing.assert_array_equal(heis2.mul(e, g), g)
        np.testing.assert_array_equal(heis2.mul(g, e), g)

    def test_inverse_is_negation(self, heis2, rng):
        g = random_algebra(heis2, rng, 16)
        np.testing.assert_array_equal(heis2.inv(g), -g)
        defect = heis2.norm(heis2.mul(g, heis2.inv(g)))
        assert np.max(defect) <= 1e-12

    def test_associativity(self, heis3p, rng):
        g, h, k = (random_algebra(heis3p, rng, 256, 2.0) for _ in range(3))
        lhs = heis3p.mul(heis3p.mul(g, h), k)
        rhs = heis3p.mul(g, heis3p.mul(h, k))
        assert np.max(heis3p.norm(lhs - rhs)) <= 1e-12

    def test_dimension_mismatch_rejected(self, heis2):
        with pytest.raises(InvalidInputError):
            heis2.mul(np.zeros(5), np.zeros(7))

    def test_conjugate_exponent(self):
        group = HeisenbergGroup(4, 1.7)
        assert abs(1.0 / group.p + 1.0 / group.q - 1.0) <= 1e-15


class TestUnipotentLaw:
    def test_inverse_matches_neumann_series(self, uni3, rng):
        # oracle: (I + N)^-1 = I - N + N^2 for 3x3 strictly upper N
        vec = random_algebra(uni3, rng, 32, 0.5)
        n_mat = uni3.to_matrix(vec)
        oracle = -n_mat + n_mat @ n_mat
        np.testing.assert_allclose(uni3.to_matrix(uni3.inv(vec)), oracle, atol=1e-14)
        eye_defect = uni3.norm(uni3.mul(vec, uni3.inv(vec)))
        assert np.max(eye_defect) <= 1e-12

    def test_inverse_times_element_is_identity_numerically(self, uni4, rng):
        vec = random_algebra(uni4, rng, 64, 0.4)
        full = np.eye(4) + uni4.to_matrix(vec)
        inv_full = np.eye(4) + uni4.to_matrix(uni4.inv(vec))
        prods = full @ inv_full
        np.testing.assert_allclose(prods, np.broadcast_to(np.eye(4), prods.shape), atol=1e-12)

    def test_mul_is_matrix_product(self, uni4, rng):
        a, b = random_algebra(uni4, rng, 2, 0.7)
        lhs = np.eye(4) + uni4.to_matrix(uni4.mul(a, b))
        rhs = (np.eye(4) + uni4.to_matrix(a)) @ (np.eye(4) + uni4.to_matrix(b))
        np.testing.assert_allclose(lhs, rhs, atol=1e-14)


class TestExpLog:
    def test_exp_zero_is_identity(self, heis2, uni4):
        for group in (heis2, uni4):
            np.testing.assert_array_equal(group.exp(group.zero()), group.identity())

    def test_heisenberg_exp_is_coordinate_identity_via_subgroup_oracle(self, heis2, rng):
        # one-parameter subgroup oracle: gamma(s) gamma(t) = gamma(s + t)
        vec = random_algebra(heis2, rng, 8)
        for s, t in [(0.3, 0.4), (1.2, -0.5)]:
            lhs = heis2.mul(heis2.exp(s * vec), heis2.exp(t * vec))
            rhs = heis2.exp((s + t) * vec)
            assert np.max(heis2.norm(lhs - rhs)) <= 1e-12
        np.testing.assert_array_equal(heis2.exp(vec), vec)

    def test_unipotent3_exp_entry(self, uni3):
        # I + N + N^2/2 puts c + a*b/2 in the corner
        a, b, c = 0.7, -0.4, 0.3
        vec = uni3.from_matrix(np.array([[0, a, c], [0, 0, b], [0, 0, 0.0]]))
        mat = np.eye(3) + uni3.to_matrix(uni3.exp(vec))
        assert mat[0, 2] == pytest.approx(c + a * b / 2, abs=1e-15)

    def test_unipotent4_log_series_roundtrip(self, uni4, rng):
        vec = random_algebra(uni4, rng, 128, 0.5)
        g = uni4.exp(vec)
        n_mat = uni4.to_matrix(g)
        oracle = n_mat - (n_mat @ n_mat) / 2 + (n_mat @ n_mat @ n_mat) / 3
        np.testing.assert_allclose(uni4.to_matrix(uni4.log(g)), oracle, atol=1e-14)
        assert np.max(uni4.norm(uni4.log(g) - vec)) <= 1e-12

    def test_derivative_at_zero_by_finite_differences(self, uni4, rng):
        vec = random_algebra(uni4, rng, 1)[0]
        h = 1e-6
        fd = (uni4.to_matrix(uni4.exp(h * vec)) - uni4.to_matrix(uni4.exp(-h * vec))) / (2 * h)
        np.testing.assert_allclose(fd, uni4.to_matrix(vec), atol=1e-8)

    def test_roundtrip_within_radius(self, heis2, uni4, rng):
        for group, scale in ((heis2, 10.0), (uni4, 0.45)):
            vec = random_algebra(group, rng, 512, scale)
            assert np.max(group.norm(group.log(group.exp(vec)) - vec)) <= 1e-10


class TestBracketAndBch:
    def test_self_bracket_vanishes(self, heis2, rng):
        u = random_algebra(heis2, rng, 32)
        assert np.max(heis2.norm(heis2.bracket(u, u))) == 0.0

    def test_heisenberg_relations(self, heis2):
        x1 = heis2.embed([1.0, 0.0])
        y1 = heis2.embed(b=[1.0, 0.0])
        z = heis2.embed(c=1.0)
        np.testing.assert_array_equal(heis2.bracket(x1, y1), z)
        np.testing.assert_array_equal(heis2.bracket(x1, z), heis2.zero())
        x2 = heis2.embed([0.0, 1.0])
        np.testing.assert_array_equal(heis2.bracket(x1, x2), heis2.zero())

    def test_unipotent_bracket_is_commutator(self, uni4, rng):
        u, v = random_algebra(uni4, rng, 2)
        a, b = uni4.to_matrix(u), uni4.to_matrix(v)
        np.testing.assert_allclose(uni4.to_matrix(uni4.bracket(u, v)), a @ b - b @ a,
                                   atol=1e-14)

    def test_jacobi_residual(self, heis2, uni4, rng):
        for group in (heis2, uni4):
            f, g, h = (random_algebra(group, rng, 256) for _ in range(3))
            residual = (group.bracket(f, group.bracket(g, h))
                        + group.bracket(g, group.bracket(h, f))
                        + group.bracket(h, group.bracket(f, g)))
            assert np.max(group.norm(residual)) <= 1e-12

    def test_bch_identity_element(self, heis2, rng):
        u = random_algebra(heis2, rng, 8)
        np.testing.assert_array_equal(heis2.bch(u, np.zeros_like(u)), u)

    def test_bch_worked_example(self, heis2):
        got = heis2.bch(heis2.embed([1.0, 0.0]), heis2.embed(b=[1.0, 0.0]))
        np.testing.assert_allclose(got, [1.0, 0.0, 1.0, 0.0, 0.5])

    def test_bch_equals_log_of_product(self, heis3p, uni4, rng):
        for group in (heis3p, uni4):
            u = random_algebra(group, rng, 512, 0.5)
            v = random_algebra(group, rng, 512, 0.5)
            via_product = group.log(group.mul(group.exp(u), group.exp(v)))
            assert np.max(group.norm(group.bch(u, v) - via_product)) <= 1e-12


class TestNorm:
    def test_zero_norm(self, heis2, uni4):
        for group in (heis2, uni4):
            assert group.norm(group.zero()) == 0.0

    @given(scale=st.floats(min_value=-5.0, max_value=5.0))
    @settings(max_examples=50, deadline=None)
    def test_homogeneity(self, scale):
        group = HeisenbergGroup(2, 2.0)
        vec = np.array([0.3, -1.2, 0.7, 0.1, -0.4])
        assert group.norm(scale * vec) == pytest.approx(abs(scale) * group.norm(vec),
                                                        rel=1e-12, abs=1e-12)

    def test_subadditive(self, heis3p, uni4, rng):
        for group in (heis3p, uni4):
            u = random_algebra(group, rng, 512)
            v = random_algebra(group, rng, 512)
            slack = group.norm(u) + group.norm(v) - group.norm(u + v)
            assert np.min(slack) >= -1e-12

    def test_unipotent_norm_is_operator_norm(self, uni4, rng):
        vec = random_algebra(uni4, rng, 1)[0]
        expected = np.linalg.norm(uni4.to_matrix(vec), ord=2)
        assert uni4.norm(vec) == pytest.approx(expected, rel=1e-12)


class TestChartMachinery:
    def test_in_ball_identity_and_strict_boundary(self, heis2):
        assert heis2.in_ball(heis2.identity(), 0.5)
        on_boundary = heis2.embed([0.5, 0.0])
        assert heis2.norm(on_boundary) == 0.5
        assert not heis2.in_ball(on_boundary, 0.5)
        assert heis2.in_ball(heis2.exp(heis2.embed([0.25, 0.0])), 0.5)

    def test_in_ball_parameter_error(self, uni4):
        with pytest.raises(ParameterError):
            uni4.in_ball(uni4.identity(), uni4.chart.rho_prime)

    def test_ball_power_radius_base_and_worked_value(self, heis2):
        assert heis2.ball_power_radius(0.1, 1) == 0.1
        assert heis2.ball_power_radius(0.1, 2) == pytest.approx(0.21, abs=1e-15)

    def test_ball_power_radius_monotone(self, heis2, uni4):
        for group, delta in ((heis2, 0.2), (uni4, 0.05)):
            radii = [group.ball_power_radius(delta, n) for n in range(1, 6)]
            radii = [r for r in radii if r is not None]
            assert all(b > a for a, b in zip(radii, radii[1:]))

    def test_ball_power_radius_chart_exceeded_marker(self):
        group = UnipotentGroup(4, chart=ChartSpec(0.5, 0.125, 2.0))
        assert group.ball_power_radius(0.1, 50) is None

    def test_ball_power_radius_contains_sampled_products(self, heis2, uni4):
        rng = substream(7, "ball-products")
        for group, delta, power in ((heis2, 0.1, 3), (uni4, 0.05, 2)):
            radius = group.ball_power_radius(delta, power)
            factors = group.sample_ball(rng, delta, 2000 * power)
            factors = factors.reshape(2000, power, group.dim)
            prod = np.broadcast_to(group.identity(), (2000, group.dim))
            for i in range(power):
                prod = group.mul(prod, group.exp(factors[:, i]))
            assert np.max(group.chart_norm(prod)) < radius

    def test_ball_power_radius_requires_small_delta(self, uni4):
        with pytest.raises(ParameterError):
            uni4.ball_power_radius(uni4.chart.rho_double_prime, 2)

    def test_inverse_stays_in_ball_power(self, heis2, rng):
        # constructive check: reverse and invert the factors of g in U_delta^j
        delta, j = 0.3, 4
        factors = sample_norm_ball(substream(3, "inv-factors"), heis2, delta, j)
        g = heis2.identity()
        for vec in factors:
            g = heis2.mul(g, heis2.exp(vec))
        inv_direct = heis2.inv(g)
        rebuilt = heis2.identity()
        for vec in factors[::-1]:
            rebuilt = heis2.mul(rebuilt, heis2.exp(-vec))
        np.testing.assert_allclose(rebuilt, inv_direct, atol=1e-12)
        assert all(heis2.norm(-vec) < delta for vec in factors)

    def test_bracket_bound_certification(self, heis2, uni4):
        for group in (heis2, uni4):
            ratio = group.chart.certify_bracket_bound(group, samples=10**4, seed=11)
            assert ratio <= 1.0

    def test_bracket_bound_violation_detected(self, heis2):
        bad = ChartSpec(rho_prime=1e6, rho_double_prime=10.0, bracket_bound=0.01)
        with pytest.raises(ParameterError):
            bad.certify_bracket_bound(heis2, samples=2000, seed=0)


class TestConfigConstruction:
    def test_group_from_config(self):
        heis = group_from_config({"kind": "heisenberg", "N": 4, "p": 2.0})
        assert isinstance(heis, HeisenbergGroup) and heis.N == 4
        uni = group_from_config({"kind": "unipotent", "n": 4})
        assert isinstance(uni, UnipotentGroup) and uni.n == 4

    def test_invalid_parameters_rejected(self):
        with pytest.raises(ParameterError):
            HeisenbergGroup(0, 2.0)
        with pytest.raises(ParameterError):
            HeisenbergGroup(2, 1.0)
        with pytest.raises(ParameterError):
            UnipotentGroup(5)
        with pytest.raises(InvalidInputError):
            group_from_config({"kind": "orthogonal"})

    def test_chart_spec_validation(self):
        with pytest.raises(ParameterError):
            ChartSpec(rho_prime=1.0, rho_double_prime=1.5, bracket_bound=2.0)
