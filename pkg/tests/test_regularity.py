"""Oscillation counting and the Monte Carlo regularity batteries."""

import numpy as np
import pytest

from liemult import (LevyModel, OscillationQuery, TimeGrid, UniformBallJumps,
                     count_oscillations, count_oscillations_on_subset,
                     exhaustive_count_reference, mc_expectation_bound,
                     mc_largest_step, mc_maximum_oscillation,
                     oscillation_axioms_test, oscillation_counts_from_outside,
                     product_exponential, sample_additive,
                     uniform_continuity_probe)
from liemult.multiplicative import MultiplicativePath
from liemult.rng import substream


def brownian_paths(heis, sigma, cells, count, seed):
    model = LevyModel(space=heis, diffusion=sigma)
    grid = TimeGrid.uniform(1.0, cells)
    return [product_exponential(sample_additive(model, grid, seed, stream=(t,)))
            for t in range(count)]


class TestCountOscillations:
    def test_constant_path_counts_zero(self, heis2):
        grid = TimeGrid.uniform(1.0, 8)
        path = MultiplicativePath.from_increments(heis2, grid, np.zeros((8, 5)))
        assert count_oscillations(path, OscillationQuery(0.5)) == 0

    def test_single_large_cell_counts_one(self, heis2):
        grid = TimeGrid.uniform(1.0, 8)
        cells = np.zeros((8, 5))
        cells[3] = heis2.embed([0.9, 0.0])
        path = MultiplicativePath.from_increments(heis2, grid, cells)
        assert count_oscillations(path, OscillationQuery(0.5)) == 1

    def test_window_restriction(self, heis2):
        grid = TimeGrid.uniform(1.0, 8)
        cells = np.zeros((8, 5))
        cells[1] = heis2.embed([0.9, 0.0])
        cells[6] = heis2.embed([-0.9, 0.0])
        path = MultiplicativePath.from_increments(heis2, grid, cells)
        assert count_oscillations(path, OscillationQuery(0.5)) == 2
        assert count_oscillations(path, OscillationQuery(0.5, window=(3, 5))) == 0
        assert count_oscillations(path, OscillationQuery(0.5, window=(0, 4))) == 1

    def test_dp_matches_exhaustive_reference(self):
        rng = substream(0, "dp-vs-brute")
        for _ in range(300):
            size = int(rng.integers(2, 13))
            outside = np.triu(rng.random((size, size)) < rng.uniform(0.1, 0.8), k=1)
            assert (int(oscillation_counts_from_outside(outside))
                    == exhaustive_count_reference(outside))

    def test_batched_dp_agrees_with_scalar(self):
        rng = substream(1, "dp-batch")
        outside = np.triu(rng.random((40, 9, 9)) < 0.5, k=1)
        batched = oscillation_counts_from_outside(outside)
        scalar = [int(oscillation_counts_from_outside(o)) for o in outside]
        np.testing.assert_array_equal(batched, scalar)


class TestAxioms:
    def test_properties_on_random_paths(self, heis2):
        paths = brownian_paths(heis2, 0.25, 16, 6, seed=5)
        report = oscillation_axioms_test(paths, delta=0.25, cases=300, seed=9)
        assert report["pass"], report

    def test_empty_subset_counts_zero(self, heis2):
        path = brownian_paths(heis2, 0.3, 8, 1, seed=1)[0]
        assert count_oscillations_on_subset(path, 0.5, []) == 0

    def test_subset_monotonicity_explicit(self, heis2):
        path = brownian_paths(heis2, 0.4, 16, 1, seed=2)[0]
        full = count_oscillations_on_subset(path, 0.3, range(17))
        half = count_oscillations_on_subset(path, 0.3, range(0, 17, 2))
        assert half <= full

    def test_counts_monotone_under_coupled_refinement(self, heis2):
        # refinement only adds grid points to the same coupled path
        model = LevyModel(space=heis2, diffusion=0.4, jump_intensity=2.0,
                          jump_law=UniformBallJumps(0.5))
        grid = TimeGrid.uniform(1.0, 16)
        for trial in range(10):
            driver = sample_additive(model, grid, 19, stream=(trial,))
            coarse = count_oscillations(product_exponential(driver),
                                        OscillationQuery(0.4))
            fine_driver = driver.refine(23, stream=(trial,))
            fine = count_oscillations(product_exponential(fine_driver),
                                      OscillationQuery(0.4))
            assert fine >= coarse


class TestMaximumOscillation:
    def test_zero_driver_trivial(self, heis2):
        model = LevyModel(space=heis2)
        rep = mc_maximum_oscillation(model, TimeGrid.uniform(1.0, 16), 0.5, 200, 0)
        assert rep.passed
        assert rep.estimates["alpha_hat"] == 0.0
        assert rep.estimates["lhs"] == 0.0

    def test_brownian_battery(self, heis2):
        model = LevyModel(space=heis2, diffusion=0.22)
        rep = mc_maximum_oscillation(model, TimeGrid.uniform(1.0, 32), 0.5, 3000, 7)
        assert rep.passed
        assert 0.0 < rep.estimates["alpha_hat"] < 1.0

    def test_small_jump_driver_near_zero_alpha(self, heis2):
        # jumps confined to the quarter ball at low intensity barely move the path
        model = LevyModel(space=heis2, jump_intensity=0.2,
                          jump_law=UniformBallJumps(0.5 / 4))
        rep = mc_maximum_oscillation(model, TimeGrid.uniform(1.0, 16), 0.5, 1000, 3)
        assert rep.passed
        assert rep.estimates["alpha_hat"] <= 0.05
        assert rep.estimates["p_endpoint_outside"] <= 0.05

    def test_report_fields(self, heis2):
        model = LevyModel(space=heis2, diffusion=0.2)
        out = mc_maximum_oscillation(model, TimeGrid.uniform(1.0, 8), 0.5, 100, 0).to_dict()
        assert {"lemma", "params", "estimates", "bound", "slack", "pass"} <= set(out)


class TestLargestStep:
    def test_zero_driver(self, heis2):
        model = LevyModel(space=heis2)
        rep = mc_largest_step(model, TimeGrid.uniform(1.0, 16), 0.5, 200, 0)
        assert rep.passed

    def test_planted_jump_forces_witness(self, heis2):
        # a single mid-path jump beyond the superset radius makes the pair
        # event certain, and the suffix pair (j, n) witnesses the bound side
        radius = heis2.ball_power_radius(0.5, 2)
        atom = heis2.embed([2.0 * radius, 0.0])
        model = LevyModel(space=heis2, jump_intensity=3.0,
                          jump_law=UniformBallJumps(0.02))
        grid = TimeGrid.uniform(1.0, 16)
        rep = mc_largest_step(model, grid, 0.5, 500, 1)
        assert rep.passed       # small jumps: both probabilities zero

        from liemult import FixedAtomJumps
        import dataclasses
        base = sample_additive(LevyModel(space=heis2), grid, 0)
        planted = dataclasses.replace(base, jump_times=np.array([0.47]),
                                      jump_vectors=atom[None, :])
        path = product_exponential(planted)
        norms = heis2.pairwise_chart_norms(path.prefix)
        upper = np.triu(np.ones_like(norms, dtype=bool), k=1)
        assert np.any((norms >= radius) & upper)                 # pair side certain
        to_end = heis2.chart_norm(heis2.mul(heis2.inv(path.prefix),
                                            path.prefix[-1]))
        assert np.any(to_end >= 0.5)                             # suffix witness (j, n)

    def test_brownian_battery(self, heis2):
        model = LevyModel(space=heis2, diffusion=0.22)
        rep = mc_largest_step(model, TimeGrid.uniform(1.0, 32), 0.5, 3000, 7)
        assert rep.passed


class TestExpectationBound:
    def test_zero_driver(self, heis2):
        model = LevyModel(space=heis2)
        rep = mc_expectation_bound(model, TimeGrid.uniform(1.0, 16), 0.5, 200, 0)
        assert rep.passed
        assert rep.mean_count == 0.0
        assert rep.bound == 0.0

    def test_calibrated_brownian(self, heis2):
        model = LevyModel(space=heis2, diffusion=0.115)
        rep = mc_expectation_bound(model, TimeGrid.uniform(1.0, 32), 0.5, 4000, 7)
        assert rep.passed
        assert 0.15 <= rep.alpha_hat <= 0.45
        assert rep.mean_count <= rep.bound + rep.slack
        assert all(entry["pass"] for entry in rep.tail.values())

    def test_unipotent_instance_battery(self, uni4):
        model = LevyModel(space=uni4, diffusion=0.04)
        rep = mc_expectation_bound(model, TimeGrid.uniform(1.0, 16), 0.1, 600, 3)
        assert rep.passed
        assert 0.0 < rep.alpha_hat < 1.0
        assert rep.mean_count <= rep.bound + rep.slack

    def test_saturated_alpha_is_inconclusive(self, heis2):
        model = LevyModel(space=heis2, diffusion=1.5)
        rep = mc_expectation_bound(model, TimeGrid.uniform(1.0, 32), 0.5, 400, 3)
        assert rep.passed is None
        assert "inconclusive" in rep.tail

    def test_split_halves_are_disjoint(self, heis2):
        # alpha from the first half must not depend on the second half's draws
        model = LevyModel(space=heis2, diffusion=0.12)
        grid = TimeGrid.uniform(1.0, 16)
        a = mc_expectation_bound(model, grid, 0.5, 400, 11)
        b = mc_expectation_bound(model, grid, 0.5, 400, 11)
        assert a.alpha_hat == b.alpha_hat and a.mean_count == b.mean_count


class TestUniformContinuityProbe:
    def test_zero_driver_returns_full_horizon(self, heis2):
        model = LevyModel(space=heis2)
        rep = uniform_continuity_probe(model, 1.0, 0.5, 0.1, 200, 0)
        assert rep.window == pytest.approx(1.0)
        assert rep.monotone and not rep.none_found

    def test_brownian_revalidates_out_of_sample(self, heis2):
        model = LevyModel(space=heis2, diffusion=0.35)
        rep = uniform_continuity_probe(model, 1.0, 1.0, 0.1, 1500, 3)
        assert rep.monotone and not rep.none_found
        fresh = uniform_continuity_probe(model, 1.0, 1.0, 0.1, 1500, 4)
        p_fresh = [p for h, p in fresh.probability_curve.items()
                   if float(h) <= rep.window][0]
        assert p_fresh <= rep.alpha + 3 * np.sqrt(rep.alpha * (1 - rep.alpha) / 1500)

    def test_hot_driver_flags_none_found(self, heis2):
        model = LevyModel(space=heis2, diffusion=3.0)
        rep = uniform_continuity_probe(model, 1.0, 0.5, 0.05, 200, 0, cells=16)
        assert rep.none_found

    def test_intensity_weakly_shrinks_window(self, heis2):
        windows = []
        for lam in (1.0, 8.0):
            model = LevyModel(space=heis2, jump_intensity=lam,
                              jump_law=UniformBallJumps(0.45))
            hs = []
            for seed in range(5):
                rep = uniform_continuity_probe(model, 1.0, 0.5, 0.2, 600, seed)
                hs.append(rep.window)
            windows.append(np.mean(hs))
        assert windows[1] <= windows[0]

    def test_alpha_validation(self, heis2):
        model = LevyModel(space=heis2)
        with pytest.raises(Exception):
            uniform_continuity_probe(model, 1.0, 0.5, 1.5, 10, 0)
