import itertools
import math

import numpy as np
import pytest

from dachains import kernel, normal
from dachains.errors import CapExceededError, DegeneratePointError
from dachains.label_switch import all_states
from dachains.normal import (
    DATASET_1,
    EstimationSettings,
    MixtureParams,
    NormalMixtureProblem,
)

import oracles


def four_sigma(samples, mean, var):
    se = math.sqrt(var / len(samples))
    return abs(np.mean(samples) - mean) <= 4 * se


class TestTypes:
    def test_params_validation(self):
        with pytest.raises(ValueError):
            MixtureParams((0.0, 1.0), (1.0, 0.0), 0.5)
        with pytest.raises(ValueError):
            MixtureParams((0.0, 1.0), (1.0, 1.0), 1.5)

    def test_swapped(self):
        p = MixtureParams((0.0, 2.0), (1.0, 3.0), 0.3)
        s = p.swapped()
        assert s.mu == (2.0, 0.0) and s.tau2 == (3.0, 1.0) and s.p == pytest.approx(0.7)

    def test_prefix(self):
        prob = NormalMixtureProblem(DATASET_1)
        assert prob.m == 10 and prob.prefix(3).z == DATASET_1[:3]

    def test_settings_validation(self):
        with pytest.raises(ValueError):
            EstimationSettings(variant="gibbs")
        with pytest.raises(ValueError):
            EstimationSettings(samples_per_row=0)

    def test_bundled_datasets_match_constants(self):
        from importlib import resources

        from dachains import io

        for name, ref in (("dataset1.txt", normal.DATASET_1), ("dataset2.txt", normal.DATASET_2)):
            text = resources.files("dachains").joinpath("data", name).read_text()
            np.testing.assert_array_equal(io.parse_data(text), ref)


class TestAllocation:
    def test_probability_by_hand(self):
        params = MixtureParams((0.0, 3.0), (1.0, 0.5), 0.4)
        f1 = 0.4 * oracles.normal_pdf(1.2, 0.0, 1.0)
        f2 = 0.6 * oracles.normal_pdf(1.2, 3.0, 0.5)
        assert normal.allocation_probability(1.2, params) == pytest.approx(f1 / (f1 + f2), rel=1e-13)

    def test_far_tail_stays_finite(self):
        params = MixtureParams((0.0, 3.0), (1e-3, 1e-3), 0.5)
        q = normal.allocation_probability(40.0, params)
        assert q == pytest.approx(0.0, abs=1e-300)

    def test_degenerate_point(self):
        # squared distance over variance overflows for both components
        params = MixtureParams((0.0, 0.0), (1e-300, 1e-300), 0.5)
        with pytest.raises(DegeneratePointError):
            normal.allocation_probability(1e5, params)

    @pytest.mark.parametrize("m", [1, 3, 6])
    def test_y_mass_matches_product(self, rng, m):
        prob = NormalMixtureProblem(DATASET_1[:m])
        params = normal.sample_prior(rng)
        for y in itertools.product((1, 2), repeat=m):
            ref = oracles.normal_y_mass(y, prob.z, params.mu, params.tau2, params.p)
            assert normal.y_mass_mda(np.array(y), prob, params) == pytest.approx(ref, rel=1e-12)

    @pytest.mark.parametrize("m", range(1, 11))
    def test_y_masses_normalise(self, rng, m):
        prob = NormalMixtureProblem(DATASET_1[:m])
        ys = all_states(m, 2)
        for _ in range(3):
            params = normal.sample_prior(rng)
            for fn in (normal.y_mass_mda, normal.y_mass_fs):
                assert abs(sum(fn(y, prob, params) for y in ys) - 1.0) <= 1e-10

    def test_fs_mass_is_flip_symmetric(self, rng):
        prob = NormalMixtureProblem(DATASET_1[:4])
        params = normal.sample_prior(rng)
        y = np.array([1, 2, 2, 1])
        assert normal.y_mass_fs(y, prob, params) == pytest.approx(normal.y_mass_fs(3 - y, prob, params))

    def test_sample_allocations_frequencies(self):
        rng = np.random.default_rng(1)
        prob = NormalMixtureProblem(DATASET_1[:3])
        params = MixtureParams((0.0, 2.5), (1.0, 1.0), 0.5)
        n = 20_000
        counts = {}
        for _ in range(n):
            y = normal.sample_allocations(prob, params, rng).labels
            counts[y] = counts.get(y, 0) + 1
        for y, c in counts.items():
            p = normal.y_mass_mda(np.array(y), prob, params)
            assert abs(c / n - p) <= 4 * math.sqrt(p * (1 - p) / n) + 1e-12


class TestParamConditionals:
    def test_component_stats(self):
        z = [1.0, 2.0, 4.0, -1.0]
        (c1, zb1, s1), (c2, zb2, s2) = normal.component_stats(z, [1, 1, 2, 1])
        assert (c1, c2) == (3, 1)
        assert zb1 == pytest.approx(2 / 3) and zb2 == 4.0
        assert s1 == pytest.approx(sum((v - 2 / 3) ** 2 for v in (1.0, 2.0, -1.0)))
        assert s2 == 0.0

    def test_empty_component(self):
        (c1, zb1, s1), _ = normal.component_stats([1.0, 2.0], [2, 2])
        assert (c1, zb1, s1) == (0, 0.0, 0.0)

    def test_moments(self):
        """Beta, inverse-gamma and conditional normal draws at 1e5 samples, 4 sigma."""
        rng = np.random.default_rng(2024)
        z = np.array(DATASET_1)
        y = np.array([1, 2, 1, 2, 2, 1, 2, 2, 2, 1])
        n = 100_000
        batch = normal.sample_params_batch(NormalMixtureProblem(tuple(z)), y, rng, n)
        (c1, zb1, s1), (c2, zb2, s2) = normal.component_stats(z, y)

        a, b = c1 + 1.0, c2 + 1.0
        assert four_sigma(batch.p, a / (a + b), a * b / ((a + b) ** 2 * (a + b + 1)))

        for c, zb, s2_, tau2, mu in ((c1, zb1, s1, batch.tau2_1, batch.mu1), (c2, zb2, s2, batch.tau2_2, batch.mu2)):
            shape = (c + 4) / 2
            scale = (s2_ + c * zb ** 2 / (c + 1) + 1) / 2
            # precision is Gamma(shape, rate=scale)
            prec = 1.0 / tau2
            assert four_sigma(prec, shape / scale, shape / scale ** 2)
            assert four_sigma(tau2, scale / (shape - 1), scale ** 2 / ((shape - 1) ** 2 * (shape - 2)))
            std = (mu - c * zb / (c + 1)) / np.sqrt(tau2 / (c + 1))
            assert four_sigma(std, 0.0, 1.0)
            assert four_sigma(std ** 2, 1.0, 2.0)

    def test_prior_draws(self):
        rng = np.random.default_rng(9)
        draws = [normal.sample_prior(rng) for _ in range(20_000)]
        p = np.array([d.p for d in draws])
        prec = np.array([1 / d.tau2[0] for d in draws])
        assert four_sigma(p, 0.5, 1 / 12)
        # IG(2, 1/2) prior: precision ~ Gamma(2, rate 1/2)
        assert four_sigma(prec, 4.0, 8.0)


class TestEstimation:
    def test_rows_are_distributions(self):
        prob = NormalMixtureProblem(DATASET_1[:3])
        K = normal.estimate_conjugate_matrix(prob, EstimationSettings(2000, 0, "mda"))
        assert K.shape == (8, 8)
        np.testing.assert_allclose(K.sum(axis=1), 1.0, atol=1e-14)
        assert np.all(K > 0)

    def test_fs_row_flip_symmetry(self):
        """FS rows average each target with its flip, so rows y and flip(y) agree in law
        and every row is symmetric under target flipping."""
        prob = NormalMixtureProblem(DATASET_1[:3])
        K = normal.estimate_conjugate_matrix(prob, EstimationSettings(2000, 0, "fs"))
        flip = np.arange(8)[::-1]
        np.testing.assert_allclose(K, K[:, flip], atol=1e-15)

    def test_fs_m1_is_rank_one(self):
        K = normal.estimate_conjugate_matrix(NormalMixtureProblem(DATASET_1[:1]), EstimationSettings(500, 0, "fs"))
        np.testing.assert_allclose(K, 0.5, atol=1e-15)
        assert kernel.dominant_eigenvalue(K) == 0.0

    def test_row_matches_direct_average(self):
        """Row estimate converges to the average of pi(y'|params) under exact conditional draws."""
        prob = NormalMixtureProblem(DATASET_1[:2])
        settings = EstimationSettings(50_000, 3, "mda")
        row = normal.estimate_row(prob, 1, settings)
        rng = np.random.default_rng(77)
        ref = np.zeros(4)
        n = 50_000
        batch = normal.sample_params_batch(prob, np.array([1, 2]), rng, n)
        for i in range(0, n, 10):
            prm = batch[i]
            ref += [oracles.normal_y_mass(y, prob.z, prm.mu, prm.tau2, prm.p) for y in itertools.product((1, 2), repeat=2)]
        ref /= n // 10
        np.testing.assert_allclose(row, ref, atol=0.02)

    def test_deterministic_and_thread_independent(self):
        prob = NormalMixtureProblem(DATASET_1[:4])
        st = EstimationSettings(1000, 5, "fs")
        a = normal.estimate_conjugate_matrix(prob, st, workers=1)
        b = normal.estimate_conjugate_matrix(prob, st, workers=4)
        np.testing.assert_array_equal(a, b)

    def test_chunking_irrelevant(self):
        prob = NormalMixtureProblem(DATASET_1[:2])
        a = normal.estimate_row(prob, 0, EstimationSettings(3000, 1, "mda", chunk=4096))
        b = normal.estimate_row(prob, 0, EstimationSettings(3000, 1, "mda", chunk=3000))
        np.testing.assert_array_equal(a, b)

    def test_cap(self):
        prob = NormalMixtureProblem(tuple(np.linspace(0, 1, 13)))
        with pytest.raises(CapExceededError):
            normal.estimate_conjugate_matrix(prob, EstimationSettings(10))

    def test_curve_rows(self):
        rows = normal.dominant_eigenvalue_curve(DATASET_1, samples_per_row=500, seed=0, ms=[1, 2])
        assert [(r[0], r[1]) for r in rows] == [(1, "mda"), (1, "fs"), (2, "mda"), (2, "fs")]
        assert all(r[3] == 0 and r[4] == 500 for r in rows)
