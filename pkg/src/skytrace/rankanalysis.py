"""Singular spectra, threshold-based channel rank, condition numbers, and
population statistics over receiver grids."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Singular values below this fraction of the strongest are numerical noise
# (a single-path channel is exactly rank one; LAPACK reports its trailing
# values near machine epsilon). They are floored to exact zero so that rank
# and condition-number rules see clean zeros. The Frobenius identity
# sum(sigma^2) = ||H||_F^2 is perturbed by at most ~1e-24 relative.
SIGMA_FLOOR_REL = 1e-12


def singular_values(h: np.ndarray) -> np.ndarray:
    """Descending singular values of a channel matrix, noise-floored.

    Values satisfy sigma_i = sqrt(lambda_i) for the eigenvalues of the Gram
    matrix H H*; trailing values under SIGMA_FLOOR_REL of sigma_1 are set
    to exact zero.
    """
    h = np.asarray(h)
    if not np.all(np.isfinite(h)):
        raise ValueError("channel matrix has non-finite entries")
    s = np.linalg.svd(h, compute_uv=False)
    if s[0] > 0.0:
        s = np.where(s < s[0] * SIGMA_FLOOR_REL, 0.0, s)
    return s


def apply_threshold(sigma: np.ndarray, thresholds) -> tuple[np.ndarray, int]:
    """Orderwise rounding rule: keep sigma_s when sigma_s >= threshold_s.

    ``thresholds`` is a scalar or a per-order vector. Survivors must also be
    strictly positive, so an all-zero spectrum has rank 0 and zero-mean
    orders cannot resurrect zero singular values. Survival is evaluated per
    order independently; non-contiguous survival is possible under
    per-order thresholds, and the rank counts all survivors.
    """
    sigma = np.asarray(sigma, dtype=float)
    thr = np.broadcast_to(np.asarray(thresholds, dtype=float), sigma.shape)
    keep = (sigma >= thr) & (sigma > 0.0)
    return np.where(keep, sigma, 0.0), int(np.count_nonzero(keep))


def relative_threshold(sigma: np.ndarray, factor: float) -> tuple[np.ndarray, int]:
    """Threshold at strongest / factor (rank counts values within ``factor``)."""
    if factor <= 1.0:
        raise ValueError("factor must be > 1")
    sigma = np.asarray(sigma, dtype=float)
    return apply_threshold(sigma, sigma[0] / factor if len(sigma) else 0.0)


def condition_number_db(sigma: np.ndarray) -> float | None:
    """20 log10(sigma_1 / sigma_2) in dB; None when sigma_2 is zero.

    Single-path channels land on the None branch (their second singular
    value is floored to zero), matching the bookkeeping that counts them
    as rank-one sites rather than giving them an unbounded ratio.
    """
    sigma = np.asarray(sigma, dtype=float)
    if len(sigma) < 2 or sigma[1] <= 0.0 or sigma[0] <= 0.0:
        return None
    return 20.0 * math.log10(sigma[0] / sigma[1])


@dataclass
class SiteResult:
    """Everything computed for one receiver location.

    Uncovered sites (flag Z or B) carry no analysis fields; ranks are
    filled per criterion label once the population pass has run.
    """

    position: np.ndarray
    flag: str
    rssi_dbm: float | None = None
    sigma: np.ndarray | None = None
    ranks: dict[str, int] = field(default_factory=dict)
    cn_db: float | None = None

    @property
    def covered(self) -> bool:
        return self.flag == "covered"


def spectra_matrix(results: list[SiteResult], n_orders: int) -> np.ndarray:
    """Stack per-site spectra into an (n_sites, n_orders) matrix, NaN rows
    for uncovered sites."""
    out = np.full((len(results), n_orders), np.nan)
    for i, r in enumerate(results):
        if r.sigma is not None:
            out[i] = r.sigma
    return out


def spectral_means(spectra: np.ndarray, population: str = "covered") -> np.ndarray:
    """Per-order mean singular value over a layer's receiver population.

    ``population='covered'`` averages covered sites only (NaN rows are
    excluded); ``'all'`` counts uncovered sites as zero-spectrum entries,
    which lowers every threshold. Raises when no site is covered.
    """
    spectra = np.asarray(spectra, dtype=float)
    covered = ~np.isnan(spectra[:, 0])
    n_cov = int(np.count_nonzero(covered))
    if n_cov == 0:
        raise ValueError("no covered sites: population-mean thresholds are undefined")
    if population == "covered":
        return spectra[covered].mean(axis=0)
    if population == "all":
        return np.nan_to_num(spectra, nan=0.0).mean(axis=0)
    raise ValueError(f"population must be 'covered' or 'all', got {population!r}")


def population_mean_thresholds(results: list[SiteResult], population: str = "covered") -> np.ndarray:
    """Per-order mean spectrum over a list of site results (one layer)."""
    if not results:
        raise ValueError("no covered sites: population-mean thresholds are undefined")
    n_orders = max((len(r.sigma) for r in results if r.sigma is not None), default=0)
    if n_orders == 0:
        raise ValueError("no covered sites: population-mean thresholds are undefined")
    return spectral_means(spectra_matrix(results, n_orders), population)


def ecdf(values) -> tuple[np.ndarray, np.ndarray]:
    """Right-continuous empirical CDF: sorted breakpoints and probabilities."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return np.empty(0), np.empty(0)
    if not np.all(np.isfinite(v)):
        raise ValueError("ecdf requires finite values")
    x, counts = np.unique(v, return_counts=True)
    return x, np.cumsum(counts) / v.size


@dataclass
class CoverageStats:
    """Exact site counts per coverage class and per-criterion rank histograms."""

    n_total: int
    n_z: int
    n_b: int
    rank_counts: dict[str, dict[int, int]]

    @property
    def p_z(self) -> float:
        return self.n_z / self.n_total

    @property
    def p_b(self) -> float:
        return self.n_b / self.n_total

    def p_rank(self, criterion: str, rank: int) -> float:
        return self.rank_counts[criterion].get(rank, 0) / self.n_total

    def p_r1(self, criterion: str) -> float:
        return self.p_rank(criterion, 1)


def coverage_probabilities(results: list[SiteResult]) -> CoverageStats:
    """Z/B/rank bookkeeping over one layer; counts are exact integers so
    P_Z + P_B + sum over ranks of P_r is identically one per criterion."""
    if not results:
        raise ValueError("empty result list")
    n_z = sum(1 for r in results if r.flag == "Z")
    n_b = sum(1 for r in results if r.flag == "B")
    labels: set[str] = set()
    for r in results:
        labels.update(r.ranks)
    rank_counts: dict[str, dict[int, int]] = {}
    for label in sorted(labels):
        hist: dict[int, int] = {}
        for r in results:
            if r.covered and label in r.ranks:
                hist[r.ranks[label]] = hist.get(r.ranks[label], 0) + 1
        rank_counts[label] = hist
    return CoverageStats(len(results), n_z, n_b, rank_counts)
