"""Step counter, gauge metric, and the exponential-moment batteries."""

import numpy as np
import pytest

from liemult import (FixedAtomJumps, HeisenbergGroup, HypothesisError, LevyModel,
                     ParameterError, UniformBallJumps,
                     bounded_jumps_check, exp_moment_estimate, gauge_distance,
                     gauge_norm, metric_modulus_curve, minimal_jump_power,
                     step_count_upper, step_counts_batch, step_triangle_test,
                     tail_decay_fit, word_scaled_distance)
from liemult.rng import substream

ALPHA, DELTA = 0.5, 0.5


@pytest.fixture(scope="module")
def moment_model():
    h = HeisenbergGroup(2, 2.0)
    return h, LevyModel(space=h, diffusion=np.array([0.10, 0.10, 0.0, 0.0, 0.0]),
                        jump_intensity=1.0,
                        jump_law=FixedAtomJumps(h.embed([0.2, 0.0])),
                        bound_delta=0.2)


class TestStepCountUpper:
    def test_identity_needs_no_factors(self, heis2, uni4):
        for group in (heis2, uni4):
            res = step_count_upper(group, group.identity(), 0.3)
            assert res.upper == 0 and res.factors.shape == (0, group.dim)

    def test_small_element_single_factor(self, heis2):
        res = step_count_upper(heis2, heis2.embed([0.3, 0.0]), DELTA)
        assert res.upper == 1

    def test_commutator_gadget_identity(self, heis2):
        # four-fold product oracle: (a e1) (b f1) (-a e1) (-b f1) = pure z of size ab
        a, b = 0.25, 0.1
        prod = heis2.identity()
        for vec in (heis2.embed([a, 0.0]), heis2.embed(b=[b, 0.0]),
                    heis2.embed([-a, 0.0]), heis2.embed(b=[-b, 0.0])):
            prod = heis2.mul(prod, heis2.exp(vec))
        np.testing.assert_allclose(prod, heis2.embed(c=a * b), atol=1e-15)

    def test_pure_z_small_is_single_factor(self, heis2):
        res = step_count_upper(heis2, heis2.embed(c=DELTA**2 / 4), DELTA)
        assert res.upper <= 4

    def test_pure_z_large_uses_gadgets(self, heis2):
        res = step_count_upper(heis2, heis2.embed(c=1.0), DELTA)
        gadgets = int(np.ceil(1.0 / (0.45 * DELTA) ** 2))
        assert res.upper == 4 * gadgets

    def test_axis_atom_norm_three_delta(self, heis2):
        res = step_count_upper(heis2, heis2.embed([3 * DELTA, 0.0]), DELTA)
        assert res.upper == 4          # ceil(1.5 / 0.45)

    def test_every_call_is_certified(self, heis2, uni4, rng):
        for group, scale in ((heis2, 2.5), (uni4, 0.35)):
            vecs = rng.standard_normal((100, group.dim)) * scale
            for vec in vecs:
                res = step_count_upper(group, group.exp(vec), 0.3)
                assert res.certified_defect <= 1e-10
                if res.upper:
                    assert np.max(group.norm(res.factors)) < 0.3

    def test_vectorized_counts_match_construction(self, heis2, rng):
        elements = rng.standard_normal((500, 5)) * rng.uniform(0.0, 3.0, size=(500, 1))
        direct = np.array([step_count_upper(heis2, g, DELTA).upper for g in elements])
        vectorized = step_counts_batch(heis2, elements, DELTA)
        np.testing.assert_array_equal(direct, vectorized)

    def test_unipotent_batch_falls_back_to_construction(self, uni4, rng):
        elements = uni4.exp(rng.standard_normal((10, 6)) * 0.3)
        counts = step_counts_batch(uni4, elements, 0.2)
        direct = [step_count_upper(uni4, g, 0.2).upper for g in elements]
        np.testing.assert_array_equal(counts, direct)

    def test_delta_validation(self, heis2):
        with pytest.raises(ParameterError):
            step_count_upper(heis2, heis2.identity(), -0.1)


class TestStepTriangle:
    def test_identity_concatenation_is_equality(self, heis2):
        g = heis2.embed([1.2, 0.0], [0.3, 0.0], 0.2)
        upper_g = step_count_upper(heis2, g, DELTA).upper
        upper_ge = step_count_upper(heis2, heis2.mul(g, heis2.identity()), DELTA).upper
        assert upper_ge == upper_g

    def test_inverse_pair_collapses(self, heis2):
        g = heis2.embed([1.2, 0.0], [0.3, 0.0], 0.2)
        gh = heis2.mul(g, heis2.inv(g))
        assert step_count_upper(heis2, gh, DELTA).upper == 0

    def test_random_pairs_concatenation_certified(self, heis2, uni4):
        for group, delta, samples in ((heis2, DELTA, 300), (uni4, 0.2, 60)):
            rep = step_triangle_test(group, samples, delta, seed=2)
            assert rep["pass"]
            assert rep["concatenation_violations"] == 0


class TestGaugeMetric:
    def test_self_distance_zero(self, heis2, rng):
        g = rng.standard_normal(5)
        assert gauge_distance(heis2, g, g) == 0.0

    def test_left_invariance_and_symmetry(self, heis2, rng):
        g, h, k = rng.standard_normal((3, 5)) * 2.0
        d = gauge_distance(heis2, g, h)
        assert gauge_distance(heis2, heis2.mul(k, g), heis2.mul(k, h)) == pytest.approx(
            d, abs=1e-12)
        assert gauge_distance(heis2, h, g) == pytest.approx(d, abs=1e-14)

    def test_triangle_inequality_sampled(self, heis2):
        rng = substream(5, "gauge-triples")
        pts = rng.standard_normal((20000, 3, 5)) * 2.0
        d_gh = gauge_distance(heis2, pts[:, 0], pts[:, 1])
        d_hk = gauge_distance(heis2, pts[:, 1], pts[:, 2])
        d_gk = gauge_distance(heis2, pts[:, 0], pts[:, 2])
        assert np.count_nonzero(d_gk > d_gh + d_hk + 1e-12) == 0

    def test_homogeneous_norm_scaling(self, heis2):
        # dilation (x, y, z) -> (s x, s y, s^2 z) scales the gauge by s
        v = heis2.embed([0.4, -0.2], [0.1, 0.3], 0.25)
        s = 1.7
        dil = heis2.embed([0.4 * s, -0.2 * s], [0.1 * s, 0.3 * s], 0.25 * s * s)
        assert gauge_norm(heis2, dil) == pytest.approx(s * gauge_norm(heis2, v), rel=1e-12)

    def test_unsupported_exponent_raises(self, heis3p):
        with pytest.raises(ParameterError):
            gauge_norm(heis3p, np.zeros(heis3p.dim))

    def test_word_scaled_fallback(self, heis3p):
        g = heis3p.embed([1.0, 0.0, 0.0])
        h = heis3p.embed([0.0, 1.0, 0.0])
        d = word_scaled_distance(heis3p, g, h, 0.5)
        assert d > 0


class TestBoundedJumps:
    def test_jump_free_model_trivially_bounded(self, heis2):
        model = LevyModel(space=heis2, diffusion=0.3)
        rep = bounded_jumps_check(model, DELTA, 1)
        assert rep["pass"] and rep["max_upper"] == 0
        assert minimal_jump_power(model, DELTA) == 0

    def test_half_ball_law_is_power_one(self, heis2):
        model = LevyModel(space=heis2, jump_intensity=1.0,
                          jump_law=UniformBallJumps(DELTA / 2))
        rep = bounded_jumps_check(model, DELTA, 1)
        assert rep["pass"] and rep["max_upper"] == 1

    def test_large_atom_needs_four_factors(self, heis2):
        model = LevyModel(space=heis2, jump_intensity=1.0,
                          jump_law=FixedAtomJumps(heis2.embed([3 * DELTA, 0.0])))
        assert bounded_jumps_check(model, DELTA, 4)["pass"]
        assert not bounded_jumps_check(model, DELTA, 3)["pass"]


class TestExpMoment:
    def test_zero_driver_estimate_is_one(self, heis2):
        rep = exp_moment_estimate(LevyModel(space=heis2), (0.25, 1.0), ALPHA, DELTA,
                                  100, 0)
        assert rep.estimate == 1.0
        assert rep.passed

    def test_alpha_zero_estimate_is_one(self, moment_model):
        _, model = moment_model
        rep = exp_moment_estimate(model, (0.25, 1.0), 0.0, DELTA, 100, 0)
        assert rep.estimate == 1.0

    def test_bounded_brownian_jump_model_diagnostics(self, moment_model):
        _, model = moment_model
        rep = exp_moment_estimate(model, (0.25, 1.0), ALPHA, DELTA, 1000, 3)
        assert rep.passed
        assert rep.diagnostics["running_mean"]["pass"]
        assert rep.diagnostics["partial_max"]["pass"]
        assert np.isfinite(rep.estimate)

    def test_unbounded_jump_model_rejected(self, heis2):
        model = LevyModel(space=heis2, jump_intensity=1.0,
                          jump_law=UniformBallJumps(0.3))   # no bound declared
        with pytest.raises(HypothesisError):
            exp_moment_estimate(model, (0.25, 1.0), ALPHA, DELTA, 10, 0)

    def test_window_validation(self, moment_model):
        _, model = moment_model
        with pytest.raises(ParameterError):
            exp_moment_estimate(model, (0.9, 0.5), ALPHA, DELTA, 10, 0)


class TestTailDecay:
    def test_zero_driver_trivially_geometric(self, heis2):
        rep = tail_decay_fit(LevyModel(space=heis2), (0.25, 1.0), ALPHA, DELTA, 100, 0)
        assert rep.passed
        assert all(pt["exceedances"] == 0 for pt in rep.tail_points)

    def test_calibrated_atom_model(self, heis2):
        model = LevyModel(space=heis2, jump_intensity=2.0,
                          jump_law=FixedAtomJumps(heis2.embed([0.4, 0.0])),
                          bound_delta=0.4)
        rep = tail_decay_fit(model, (0.25, 1.0), ALPHA, DELTA, 1500, 3)
        assert rep.passed
        assert rep.fitted_slope <= np.log(rep.q_hat) + 0.1
        assert rep.params["jump_power"] == 1

    def test_quadrupling_trials_halves_slope_se(self, heis2):
        # the exceedance floor scales with the trial count so both runs keep
        # the same usable-level policy and the binomial slope SE is comparable
        model = LevyModel(space=heis2, jump_intensity=2.0,
                          jump_law=FixedAtomJumps(heis2.embed([0.4, 0.0])),
                          bound_delta=0.4)
        small = tail_decay_fit(model, (0.25, 1.0), ALPHA, DELTA, 800, 3,
                               min_exceedances=10)
        big = tail_decay_fit(model, (0.25, 1.0), ALPHA, DELTA, 3200, 3,
                             min_exceedances=40)
        ratio = big.diagnostics["slope_se"] / small.diagnostics["slope_se"]
        assert 0.3 <= ratio <= 0.7


class TestMetricModulus:
    def test_zero_driver_all_zero(self, heis2):
        model = LevyModel(space=heis2)
        rep = metric_modulus_curve(model, 1.0, ALPHA, [0.25, 0.125], 50, 0, cells=64)
        assert rep.passed
        assert all(v == 0.0 for v in rep.diagnostics["values"])

    def test_brownian_jump_curve_decreases(self, moment_model):
        _, model = moment_model
        rep = metric_modulus_curve(model, 1.0, ALPHA,
                                   [0.25, 0.125, 0.0625, 0.03125, 0.015625],
                                   300, 3, cells=256)
        assert rep.passed
        values = rep.diagnostics["values"]
        assert values[-1] < values[0] / 4

    def test_rare_jump_window_scaling(self, heis2):
        # Poisson small-window oracle: jump mass inside a window of size w
        # scales like lambda * w, so the curve collapses with the window
        model = LevyModel(space=heis2, jump_intensity=1.0,
                          jump_law=FixedAtomJumps(heis2.embed([0.3, 0.0])),
                          bound_delta=0.3)
        rep = metric_modulus_curve(model, 1.0, ALPHA, [0.5, 0.125, 0.03125],
                                   600, 5, cells=128)
        values = rep.diagnostics["values"]
        assert values[-1] <= values[0] / 4

    def test_requires_p_two(self, heis3p):
        model = LevyModel(space=heis3p)
        with pytest.raises(ParameterError):
            metric_modulus_curve(model, 1.0, ALPHA, [0.25], 10, 0, cells=32)
