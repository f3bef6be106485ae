"""Acceptance suite: one test per release criterion, one PASS line each.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines as they
print. The urban-canyon and open-field runs come from the scenario files
shipped under scenarios/.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from skytrace.geometry import Scene, is_inside_building
from skytrace.materials import BUILTIN_MATERIALS
from skytrace.mimo import ArrayConfig, synthesize_channel
from skytrace.propagation import (
    PathEnumerator,
    PathSet,
    PropPath,
    SPEED_OF_LIGHT,
    attach_amplitudes,
    enumerate_paths,
    rssi,
)
from skytrace.rankanalysis import relative_threshold, singular_values
from skytrace.sweep import run_sweep

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
FREQ = 3.4e9
LAMBDA = SPEED_OF_LIGHT / FREQ


def passline(n: int, msg: str) -> None:
    print(f"PASS  criterion {n}: {msg}")


@pytest.fixture(scope="module")
def urban_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("urban_w1")
    t0 = time.perf_counter()
    outcome = run_sweep(SCENARIOS / "urban_canyon.cfg", workers=1, out_dir=out)
    elapsed = time.perf_counter() - t0
    return outcome, elapsed


@pytest.fixture(scope="module")
def open_field_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("field_w1")
    return run_sweep(SCENARIOS / "open_field.cfg", workers=1, out_dir=out)


def test_criterion_1_friis_oracle():
    t0 = time.perf_counter()
    scene = Scene.build(
        [], BUILTIN_MATERIALS["perfect"], BUILTIN_MATERIALS["concrete"],
        bounds=[[-500, -500], [500, 500]],
    )
    # Equal heights put the receiver broadside at 100 m; keep the LoS term only.
    ps = enumerate_paths([0, 0, 10], [0, 100, 10], scene, max_order=0)
    assert len(ps.paths) == 1 and ps.paths[0].order == 0
    value = rssi(attach_amplitudes(ps, scene, LAMBDA), 10.0)
    oracle = 10 * math.log10(10 * 1000) - 20 * math.log10(
        4 * math.pi * 100 * FREQ / SPEED_OF_LIGHT
    )
    assert abs(value - oracle) < 1e-9
    assert abs(value - (-43.08)) < 0.01
    assert -55.0 < value < -40.0
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    passline(1, f"LoS RSSI {value:.4f} dBm (oracle {oracle:.4f}), {elapsed:.2f}s")


def test_criterion_2_two_ray_oracle():
    t0 = time.perf_counter()
    scene = Scene.build(
        [], BUILTIN_MATERIALS["perfect"], BUILTIN_MATERIALS["concrete"],
        bounds=[[-2600, -2600], [2600, 2600]],
    )
    h1, h2 = 10.0, 30.0
    k = 2 * math.pi / LAMBDA
    en = PathEnumerator(scene, [0, 0, h1])
    worst = 0.0
    for d in np.logspace(math.log10(50), math.log10(2000), 200):
        d1 = math.hypot(d, h2 - h1)
        d2 = math.hypot(d, h1 + h2)
        p_w = 10.0 * (LAMBDA / (4 * math.pi)) ** 2 * abs(
            np.exp(-1j * k * d1) / d1 - np.exp(-1j * k * d2) / d2
        ) ** 2
        ps = attach_amplitudes(en.paths_to([d, 0, h2]), scene, LAMBDA)
        worst = max(worst, abs(rssi(ps, 10.0) - 10 * math.log10(p_w * 1000)))
    elapsed = time.perf_counter() - t0
    assert worst < 0.01
    assert elapsed < 5.0
    passline(2, f"two-ray max deviation {worst:.2e} dB over 200 distances, {elapsed:.2f}s")


def test_criterion_3_svd_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(1000):
        h = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        s = singular_values(h)
        lam = np.sort(np.linalg.eigvalsh(h @ h.conj().T))[::-1]
        worst = max(worst, float(np.max(np.abs(s**2 - lam) / lam[0])))
    elapsed = time.perf_counter() - t0
    assert worst < 1e-10
    assert elapsed < 5.0
    passline(3, f"sigma^2 vs Gram eigenvalues, max rel err {worst:.2e}, {elapsed:.2f}s")


def test_criterion_4_rank1_law():
    rng = np.random.default_rng(103)
    tx_arr = ArrayConfig(4, 1.0, axis=(1, 0, 0))
    rx_arr = ArrayConfig(4, 0.5, axis=(1, 0, 0))
    worst = 0.0
    for _ in range(500):
        dep = rng.normal(size=3)
        arr = rng.normal(size=3)
        dep /= np.linalg.norm(dep)
        arr /= np.linalg.norm(arr)
        amp = rng.uniform(1e-7, 1e-3) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        length = rng.uniform(20, 2000)
        path = PropPath(
            points=np.array([[0, 0, 0], [length, 0, 0]]),
            length=length, dep_dir=dep, arr_dir=arr, order=0, facet_ids=(),
            amplitude=amp,
        )
        h = synthesize_channel(PathSet((path,), "covered"), tx_arr, rx_arr, LAMBDA)
        s = singular_values(h)
        worst = max(worst, s[1] / s[0])
        for factor in (10.0, 1e2, 1e4):
            assert relative_threshold(s, factor)[1] == 1
    assert worst < 1e-12
    passline(4, f"500 single-path channels: max sigma2/sigma1 = {worst:.2e}, rank 1 at K=10..1e4")


def test_criterion_5_threshold_monotonicity():
    rng = np.random.default_rng(107)
    for _ in range(10_000):
        sigma = np.sort(rng.uniform(0, 1, 4))[::-1]
        ranks = []
        for factor in (10.0, 1e2, 1e4):
            thresholded, rank = relative_threshold(sigma, factor)
            keep = (sigma >= sigma[0] / factor) & (sigma > 0)  # direct oracle
            assert np.array_equal(thresholded > 0, keep)
            assert rank == int(keep.sum())
            ranks.append(rank)
        assert ranks[0] <= ranks[1] <= ranks[2]
    passline(5, "rank(K=10) <= rank(K=1e2) <= rank(K=1e4) on 1e4 spectra; survivors exact")


def test_criterion_6_altitude_trend(urban_run):
    outcome, elapsed = urban_run
    scene = outcome.scene
    assert len(scene.buildings) == 20
    assert all(10.0 <= b.height <= 30.0 for b in scene.buildings)
    assert outcome.config.tx_height_m == 10.0
    assert outcome.config.grid_shape == (30, 24)

    by_alt = {layer.altitude_m: layer for layer in outcome.layers}

    def frac_rank2(layer):
        covered = [r for r in layer.results if r.covered]
        return sum(1 for r in covered if r.ranks["rel100"] >= 2) / len(covered)

    def median_cn(layer):
        cns = [r.cn_db for r in layer.results if r.cn_db is not None]
        return float(np.median(cns))

    f110, f30 = frac_rank2(by_alt[110.0]), frac_rank2(by_alt[30.0])
    c110, c30 = median_cn(by_alt[110.0]), median_cn(by_alt[30.0])
    assert f110 <= f30
    assert c110 >= c30
    assert elapsed < 60.0
    passline(
        6,
        f"rank>=2 fraction {f110:.3f}@110m <= {f30:.3f}@30m; "
        f"median CN {c110:.1f}dB@110m >= {c30:.1f}dB@30m; {elapsed:.1f}s",
    )


def test_criterion_7_high_rank_rarity(open_field_run):
    outcome = open_field_run
    assert len(outcome.scene.buildings) == 0
    worst = 0.0
    for layer in outcome.layers:
        n = layer.stats.n_total
        high = sum(1 for r in layer.results if r.covered and r.ranks.get("mean", 0) >= 3)
        worst = max(worst, high / n)
    assert worst < 0.05
    passline(7, f"open field, mean criterion: max P(rank>=3) = {worst:.4f} over 4 altitudes")


def test_criterion_8_bookkeeping_conservation(urban_run):
    outcome, _ = urban_run
    for layer in outcome.layers:
        st = layer.stats
        for label, hist in st.rank_counts.items():
            assert st.n_z + st.n_b + sum(hist.values()) == st.n_total, (layer.altitude_m, label)
        for r in layer.results:
            assert (r.flag == "B") == is_inside_building(r.position, outcome.scene)
    passline(8, "P_Z + P_B + sum_r P_r == 1 exactly; B flags match geometry ground truth")


def test_criterion_9_worker_determinism(urban_run, tmp_path_factory):
    outcome_w1, _ = urban_run
    out2 = tmp_path_factory.mktemp("urban_w2")
    run_sweep(SCENARIOS / "urban_canyon.cfg", workers=2, out_dir=out2)
    a = (outcome_w1.out_dir / "sites.csv").read_bytes()
    b = (out2 / "sites.csv").read_bytes()
    assert a == b
    passline(9, f"sites.csv byte-identical across worker counts ({len(a)} bytes)")
