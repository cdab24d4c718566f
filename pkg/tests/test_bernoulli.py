import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dachains import bernoulli, kernel
from dachains.bernoulli import BernoulliConfig

import oracles

# published 5-decimal values for rho = 0.1, m = 10, m1 = 5
PUBLISHED_MDA = np.array([
    [0.10138, 0.39862, 0.39862, 0.10138],
    [0.00241, 0.99457, 0.00061, 0.00241],
    [0.00241, 0.00061, 0.99457, 0.00241],
    [0.10138, 0.39862, 0.39862, 0.10138],
])


class TestConfig:
    @pytest.mark.parametrize("args", [(0.5, 4, 2), (0.0, 4, 2), (0.1, 0, 0), (0.1, 4, 5)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            BernoulliConfig(*args)

    def test_default_data(self):
        cfg = BernoulliConfig(0.1, 5, 2)
        np.testing.assert_array_equal(cfg.default_data(), [0, 0, 0, 1, 1])
        assert cfg.m0 == 3
        assert BernoulliConfig.balanced(0.2, 7).m1 == 3


class TestPosterior:
    @pytest.mark.parametrize("rho,m,m1", [(0.1, 10, 5), (0.3, 6, 1), (0.45, 9, 9), (0.2, 3, 0)])
    def test_against_product_formula(self, rho, m, m1):
        cfg = BernoulliConfig(rho, m, m1)
        ref = oracles.bernoulli_posterior(rho, cfg.default_data())
        np.testing.assert_allclose(bernoulli.posterior(cfg), ref, rtol=1e-12)

    def test_published_masses(self):
        pi = bernoulli.posterior(BernoulliConfig(0.1, 10, 5))
        np.testing.assert_allclose(pi, [0.003, 0.497, 0.497, 0.003], atol=5e-4)


class TestMdaMatrix:
    @pytest.mark.parametrize("rho", [0.1, 0.25, 0.4])
    @pytest.mark.parametrize("m,m1", [(1, 0), (1, 1), (3, 1), (5, 2), (6, 6)])
    def test_against_enumeration(self, rho, m, m1):
        cfg = BernoulliConfig(rho, m, m1)
        ref = np.array(oracles.bernoulli_mda_matrix(rho, cfg.default_data()))
        np.testing.assert_allclose(bernoulli.mda_mtm(cfg), ref, atol=1e-13)

    def test_published_entries(self):
        M = bernoulli.mda_mtm(BernoulliConfig(0.1, 10, 5))
        np.testing.assert_allclose(M, PUBLISHED_MDA, atol=5e-6)

    def test_reversible_wrt_posterior(self):
        cfg = BernoulliConfig(1 / 3, 12, 4)
        assert kernel.detailed_balance_residual(bernoulli.mda_mtm(cfg), bernoulli.posterior(cfg)) < 1e-15

    def test_large_m_stays_finite(self):
        M = bernoulli.mda_mtm(BernoulliConfig(0.01, 500, 250))
        assert np.all(np.isfinite(M))
        np.testing.assert_allclose(M.sum(axis=1), 1.0, atol=1e-8)

    def test_conditionals_compose_to_matrix(self):
        cfg = BernoulliConfig(0.2, 7, 3)
        A, B = bernoulli.conditionals(cfg)
        np.testing.assert_allclose(B @ A, bernoulli.mda_mtm(cfg), atol=1e-14)

    def test_conditionals_reject_mismatched_data(self):
        with pytest.raises(ValueError):
            bernoulli.conditionals(BernoulliConfig(0.2, 3, 1), z=[1, 1, 0])


class TestFsMatrix:
    @pytest.mark.parametrize("rho,m,m1", [(0.1, 4, 2), (0.3, 5, 1), (0.45, 3, 3)])
    def test_against_enumeration(self, rho, m, m1):
        cfg = BernoulliConfig(rho, m, m1)
        ref = np.array(oracles.bernoulli_fs_matrix(rho, cfg.default_data()))
        np.testing.assert_allclose(bernoulli.fs_mtm(cfg), ref, atol=1e-13)

    def test_sandwich_route(self):
        cfg = BernoulliConfig(0.1, 8, 4)
        np.testing.assert_allclose(bernoulli.fs_mtm(cfg), bernoulli.fs_mtm_sandwich(cfg), atol=1e-14)


class TestClosedForm:
    def test_published_eigenvalues(self):
        cf10 = bernoulli.closed_form_eigenvalues(BernoulliConfig(0.1, 10, 5))
        cf20 = bernoulli.closed_form_eigenvalues(BernoulliConfig(0.1, 20, 10))
        assert abs(cf10.lambda1 - 0.99395) <= 5e-6 and abs(cf10.lambda2 - 0.19795) <= 5e-6
        assert abs(cf20.lambda1 - 0.99996) <= 5e-6 and abs(cf20.lambda2 - 0.15195) <= 5e-6

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.02, 0.48), st.integers(1, 40), st.data())
    def test_matches_numeric(self, rho, m, data):
        m1 = data.draw(st.integers(0, m))
        cfg = BernoulliConfig(rho, m, m1)
        M = bernoulli.mda_mtm(cfg)
        cf = bernoulli.closed_form_eigenvalues(cfg)
        np.testing.assert_allclose(M @ cf.v1, cf.lambda1 * cf.v1, atol=1e-10)
        np.testing.assert_allclose(M @ cf.v2, cf.lambda2 * cf.v2, atol=1e-10)
        num = np.sort(np.linalg.eigvals(M).real)[::-1]
        assert kernel.spectra_distance(num[1:], cf.eigenvalues()) < 1e-9

    def test_fs_keeps_only_lambda2(self):
        cfg = BernoulliConfig(0.2, 12, 6)
        cf = bernoulli.closed_form_eigenvalues(cfg)
        ev = kernel.spectrum(bernoulli.fs_mtm(cfg), bernoulli.posterior(cfg)).eigenvalues
        np.testing.assert_allclose(ev, [cf.lambda2, 0.0, 0.0], atol=1e-12)

    def test_conjugate_shares_spectrum(self):
        cfg = BernoulliConfig(1 / 3, 6, 3)
        big = kernel.spectrum(bernoulli.conjugate_mtm(cfg), bernoulli.y_marginal(cfg)).eigenvalues
        small = kernel.spectrum(bernoulli.mda_mtm(cfg), bernoulli.posterior(cfg)).eigenvalues
        assert kernel.spectra_distance(big, small) < 1e-10


class TestSpecialMtm:
    def test_pattern_enforced(self):
        with pytest.raises(ValueError):
            bernoulli.SpecialMtm(0.3, 0.2, 0.3, 0.1, 0.5, 0.5)
        with pytest.raises(ValueError):
            bernoulli.SpecialMtm.from_matrix(np.full((4, 4), 0.25) + np.diag([0.1, -0.1, 0, 0]))

    def test_round_trip_from_mda(self):
        M = bernoulli.mda_mtm(BernoulliConfig(0.1, 10, 5))
        S = bernoulli.SpecialMtm.from_matrix(M)
        np.testing.assert_allclose(S.matrix(), M, atol=1e-15)

    def test_eigen_solutions(self):
        from dachains.verify import random_special_mtm

        rng = np.random.default_rng(0)
        for _ in range(100):
            S = random_special_mtm(rng)
            M = S.matrix()
            rep = bernoulli.analyze_special_mtm(S)
            np.testing.assert_allclose(M @ rep.eigenvectors, rep.eigenvectors * rep.eigenvalues, atol=1e-12)
            np.testing.assert_allclose(rep.stationary @ M, rep.stationary, atol=1e-14)
            assert rep.stationary.sum() == pytest.approx(1.0)

    def test_mda_lambda2_two_ways(self):
        cfg = BernoulliConfig(0.2, 9, 4)
        rep = bernoulli.analyze_special_mtm(bernoulli.mda_mtm(cfg))
        assert rep.eigenvalues[2] == pytest.approx(bernoulli.closed_form_eigenvalues(cfg).lambda2, abs=1e-13)


class TestSweep:
    def test_mda_increasing_to_one(self):
        rows = bernoulli.eigenvalue_sweep([0.1], range(2, 101, 2), "mda")
        dom = np.array([r[4] for r in rows])
        gap = np.array([r[5] for r in rows])
        assert np.all(np.diff(dom) >= 0) and np.all(dom <= 1.0)
        # the gap keeps resolving the approach to 1 after dom rounds to 1.0
        assert np.all(np.diff(gap) < 0) and np.all(gap > 0)
        np.testing.assert_allclose(dom + gap, 1.0, atol=1e-15)

    def test_fs_rises_then_falls(self):
        rows = bernoulli.eigenvalue_sweep([0.1], range(2, 101, 2), "fs")
        dom = np.array([r[4] for r in rows])
        peak = int(np.argmax(dom))
        assert 0 < peak < len(dom) - 1
        assert np.all(np.diff(dom[peak:]) < 0)
        assert dom.max() < 0.5

    def test_empty_range(self):
        assert bernoulli.eigenvalue_sweep([0.1, 0.2], [], "mda") == []

    def test_unknown_chain(self):
        with pytest.raises(ValueError):
            bernoulli.eigenvalue_sweep([0.1], [2], "gibbs")
