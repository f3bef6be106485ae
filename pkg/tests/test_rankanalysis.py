from fractions import Fraction

import numpy as np
import pytest

from skytrace.rankanalysis import (
    SiteResult,
    apply_threshold,
    condition_number_db,
    coverage_probabilities,
    ecdf,
    population_mean_thresholds,
    relative_threshold,
    singular_values,
    spectral_means,
)


def site(flag="covered", sigma=None, ranks=None, cn=None, rssi=None):
    return SiteResult(
        position=np.zeros(3),
        flag=flag,
        rssi_dbm=rssi,
        sigma=None if sigma is None else np.asarray(sigma, dtype=float),
        ranks=ranks or {},
        cn_db=cn,
    )


class TestSingularValues:
    def test_identity(self):
        assert np.allclose(singular_values(np.eye(4)), [1, 1, 1, 1])

    def test_diagonal(self):
        assert np.allclose(singular_values(np.diag([3.0, 2.0, 1.0, 0.0])), [3, 2, 1, 0])

    def test_gram_eigenvalue_oracle(self):
        # sigma_i^2 must match the Gram-matrix eigenvalues from an
        # independent LAPACK route (Hermitian eigensolver, not SVD).
        rng = np.random.default_rng(29)
        worst = 0.0
        for _ in range(1000):
            h = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            s = singular_values(h)
            lam = np.sort(np.linalg.eigvalsh(h @ h.conj().T))[::-1]
            worst = max(worst, np.max(np.abs(s**2 - lam) / lam[0]))
        assert worst < 1e-10

    def test_descending_and_nonnegative(self):
        rng = np.random.default_rng(31)
        for _ in range(100):
            s = singular_values(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
            assert np.all(np.diff(s) <= 0)
            assert np.all(s >= 0)

    def test_frobenius_identity(self):
        rng = np.random.default_rng(33)
        for _ in range(100):
            h = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            s = singular_values(h)
            assert np.sum(s**2) == pytest.approx(np.linalg.norm(h, "fro") ** 2, rel=1e-9)

    def test_noise_floor_zeroes_rank1_tail(self):
        a = np.exp(1j * np.linspace(0, 2, 4))
        h = 1e-4 * np.outer(a, a.conj())
        s = singular_values(h)
        assert s[0] > 0
        assert np.all(s[1:] == 0.0)

    def test_nonfinite_rejected(self):
        h = np.eye(4, dtype=complex)
        h[0, 0] = np.nan
        with pytest.raises(ValueError):
            singular_values(h)


class TestApplyThreshold:
    def test_relative_k10(self):
        sigma = np.array([1.0, 0.5, 0.01, 0.001])
        thresholded, rank = relative_threshold(sigma, 10.0)
        assert rank == 2
        assert np.allclose(thresholded, [1.0, 0.5, 0.0, 0.0])

    def test_relative_k10000_keeps_all(self):
        sigma = np.array([1.0, 0.5, 0.01, 0.001])
        _, rank = relative_threshold(sigma, 1e4)
        assert rank == 4

    def test_mean_noncontiguous_survival(self):
        sigma = np.array([1.0, 0.2, 0.1, 0.05])
        means = np.array([0.8, 0.3, 0.05, 0.01])
        thresholded, rank = apply_threshold(sigma, means)
        assert rank == 3
        assert np.allclose(thresholded, [1.0, 0.0, 0.1, 0.05])

    def test_zero_spectrum_rank0(self):
        _, rank = apply_threshold(np.zeros(4), np.zeros(4))
        assert rank == 0
        _, rank = relative_threshold(np.zeros(4), 10.0)
        assert rank == 0

    def test_monotone_in_factor(self):
        rng = np.random.default_rng(37)
        for _ in range(10_000):
            sigma = np.sort(rng.uniform(0, 1, 4))[::-1]
            ranks = [relative_threshold(sigma, k)[1] for k in (10.0, 100.0, 10_000.0)]
            assert ranks[0] <= ranks[1] <= ranks[2]
            # Direct per-element comparison oracle.
            for k, r in zip((10.0, 100.0, 10_000.0), ranks):
                expected = int(np.sum((sigma >= sigma[0] / k) & (sigma > 0)))
                assert r == expected

    def test_scale_invariance_relative(self):
        rng = np.random.default_rng(39)
        sigma = np.sort(rng.uniform(0, 1, 4))[::-1]
        for c in (1e-6, 3.7, 1e8):
            assert relative_threshold(sigma, 100.0)[1] == relative_threshold(c * sigma, 100.0)[1]

    def test_factor_validation(self):
        with pytest.raises(ValueError):
            relative_threshold(np.array([1.0, 0.5]), 1.0)


class TestConditionNumber:
    def test_20db(self):
        assert condition_number_db(np.array([1.0, 0.1])) == pytest.approx(20.0)

    def test_equal_is_zero_db(self):
        assert condition_number_db(np.array([0.5, 0.5])) == pytest.approx(0.0)

    def test_zero_sigma2_undefined(self):
        assert condition_number_db(np.array([1.0, 0.0, 0.0, 0.0])) is None
        assert condition_number_db(np.array([0.0, 0.0])) is None

    def test_invariance_under_scaling(self):
        sigma = np.array([0.8, 0.05, 0.01, 0.001])
        assert condition_number_db(sigma) == pytest.approx(condition_number_db(sigma * 123.0))

    def test_nonnegative(self):
        rng = np.random.default_rng(41)
        for _ in range(200):
            sigma = np.sort(rng.uniform(0, 1, 4))[::-1]
            cn = condition_number_db(sigma)
            if cn is not None:
                assert cn >= 0.0


class TestPopulationMeans:
    def test_two_sites(self):
        results = [site(sigma=[2, 1, 0, 0]), site(sigma=[4, 1, 0, 0])]
        assert np.allclose(population_mean_thresholds(results), [3, 1, 0, 0])

    def test_single_site(self):
        results = [site(sigma=[2, 1, 0.5, 0])]
        assert np.allclose(population_mean_thresholds(results), [2, 1, 0.5, 0])

    def test_all_uncovered_errors(self):
        results = [site(flag="Z"), site(flag="B")]
        with pytest.raises(ValueError, match="no covered sites"):
            population_mean_thresholds(results)

    def test_population_all_counts_zeros(self):
        spectra = np.array([[2.0, 1.0], [np.nan, np.nan]])
        assert np.allclose(spectral_means(spectra, "covered"), [2.0, 1.0])
        assert np.allclose(spectral_means(spectra, "all"), [1.0, 0.5])

    def test_scale_covariance(self):
        rng = np.random.default_rng(43)
        spectra = np.sort(rng.uniform(0, 1, (50, 4)), axis=1)[:, ::-1]
        means = spectral_means(spectra)
        scaled = spectral_means(spectra * 7.5)
        assert np.allclose(scaled, 7.5 * means)
        ranks_a = [apply_threshold(s, means)[1] for s in spectra]
        ranks_b = [apply_threshold(7.5 * s, scaled)[1] for s in spectra * 1.0]
        assert ranks_a == ranks_b

    def test_means_descending(self):
        rng = np.random.default_rng(45)
        spectra = np.sort(rng.uniform(0, 1, (200, 4)), axis=1)[:, ::-1]
        means = spectral_means(spectra)
        assert np.all(np.diff(means) <= 0)


class TestEcdf:
    def test_ties(self):
        x, p = ecdf([1, 1, 2])
        assert np.allclose(x, [1, 2])
        assert np.allclose(p, [2 / 3, 1.0])

    def test_single_value_unit_step(self):
        x, p = ecdf([5.0])
        assert np.allclose(x, [5.0])
        assert np.allclose(p, [1.0])

    def test_median_of_1_to_100(self):
        x, p = ecdf(np.arange(1, 101))
        assert p[np.searchsorted(x, 50)] == pytest.approx(0.5)

    def test_empty(self):
        x, p = ecdf([])
        assert len(x) == 0 and len(p) == 0

    def test_monotone_bounded(self):
        rng = np.random.default_rng(47)
        x, p = ecdf(rng.normal(size=500))
        assert np.all(np.diff(p) > 0)
        assert np.all((p > 0) & (p <= 1))
        assert p[-1] == 1.0

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            ecdf([1.0, np.inf])


class TestCoverageProbabilities:
    def test_mixed_example(self):
        results = (
            [site(flag="Z")] * 3
            + [site(flag="B")] * 2
            + [site(sigma=[1, 0, 0, 0], ranks={"rel10": 1})] * 4
            + [site(sigma=[1, 0.5, 0, 0], ranks={"rel10": 2})]
        )
        stats = coverage_probabilities(results)
        assert stats.p_z == pytest.approx(0.3)
        assert stats.p_b == pytest.approx(0.2)
        assert stats.p_r1("rel10") == pytest.approx(0.4)

    def test_all_covered_rank1(self):
        results = [site(sigma=[1, 0, 0, 0], ranks={"mean": 1})] * 5
        stats = coverage_probabilities(results)
        assert stats.p_z == 0 and stats.p_b == 0
        assert stats.p_r1("mean") == 1.0

    def test_all_inside_buildings(self):
        stats = coverage_probabilities([site(flag="B")] * 4)
        assert stats.p_b == 1.0

    def test_exact_conservation(self):
        rng = np.random.default_rng(53)
        results = []
        for _ in range(237):
            roll = rng.uniform()
            if roll < 0.2:
                results.append(site(flag="Z"))
            elif roll < 0.35:
                results.append(site(flag="B"))
            else:
                results.append(site(sigma=[1, 0, 0, 0], ranks={"c": int(rng.integers(0, 5))}))
        stats = coverage_probabilities(results)
        total = (
            Fraction(stats.n_z, stats.n_total)
            + Fraction(stats.n_b, stats.n_total)
            + sum(Fraction(v, stats.n_total) for v in stats.rank_counts["c"].values())
        )
        assert total == 1

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            coverage_probabilities([])
