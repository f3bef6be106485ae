"""Scenario orchestration: the altitude sweep and its artifact files.

One run evaluates every receiver position at every altitude (optionally in
a worker pool), applies the configured rank criteria layer by layer (the
population-mean criterion needs the whole layer's spectra before any rank
is defined), and emits sites.csv, cdf.csv, per-altitude heatmaps, and a
manifest. Site results are gathered into pre-indexed slots, so output
bytes never depend on worker count or completion order.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import outputs
from ._version import __version__
from .estimators import ChannelMapper, PopulationMeanThreshold, RelativeThreshold
from .geometry import Scene
from .ingest import (
    ScenarioConfig,
    build_grid,
    criterion_label,
    load_buildings,
    parse_config,
    parse_criterion_spec,
)
from .rankanalysis import (
    CoverageStats,
    SiteResult,
    coverage_probabilities,
    spectra_matrix,
)

log = logging.getLogger(__name__)

_CHUNK_SITES = 64


@dataclass
class LayerOutcome:
    """One altitude's results plus its population statistics."""

    altitude_m: float
    results: list[SiteResult]
    stats: CoverageStats
    mean_thresholds: np.ndarray | None


@dataclass
class RunOutcome:
    config: ScenarioConfig
    scene: Scene
    layers: list[LayerOutcome]
    criteria: list[str]
    manifest: dict
    out_dir: Path | None


def build_scene_from_config(config: ScenarioConfig) -> Scene:
    """Load footprints (if any) and extrude them over the padded target area."""
    buildings = []
    if config.buildings_geojson is not None:
        text = Path(config.buildings_geojson).read_text()
        buildings = load_buildings(text, config.origin, config.level_height_m)

    half_w, half_d = config.area_width_m / 2.0, config.area_depth_m / 2.0
    cx, cy = config.area_center_east_m, config.area_center_north_m
    pad = max(50.0, 0.1 * max(config.area_width_m, config.area_depth_m))
    bounds = np.array(
        [
            [min(cx - half_w, config.tx_east_m) - pad, min(cy - half_d, config.tx_north_m) - pad],
            [max(cx + half_w, config.tx_east_m) + pad, max(cy + half_d, config.tx_north_m) + pad],
        ]
    )
    return Scene.build(
        buildings, config.ground_material, config.building_material, bounds=bounds
    )


def make_mapper(config: ScenarioConfig, scene: Scene) -> ChannelMapper:
    return ChannelMapper(
        carrier_freq_hz=config.carrier_freq_hz,
        tx_position=tuple(config.tx_position),
        tx_power_w=config.tx_power_w,
        max_reflections=config.max_reflections,
        n_elements=config.n_elements,
        d_tx_wavelengths=config.d_tx_wavelengths,
        d_rx_wavelengths=config.d_rx_wavelengths,
        tx_array_axis=config.tx_array_axis,
        rx_array_axis=config.rx_array_axis,
        rssi_mode=config.rssi_sum_mode,
    ).fit(scene)


# Worker-pool plumbing: each worker holds the fitted mapper once and
# evaluates index-tagged chunks; the parent reassembles them by index.
_WORKER_MAPPER: ChannelMapper | None = None


def _init_worker(mapper: ChannelMapper) -> None:
    global _WORKER_MAPPER
    _WORKER_MAPPER = mapper


def _eval_chunk(positions: np.ndarray) -> list[SiteResult]:
    assert _WORKER_MAPPER is not None
    return _WORKER_MAPPER.evaluate(positions)


def evaluate_positions(mapper: ChannelMapper, positions: np.ndarray, workers: int = 1) -> list[SiteResult]:
    """Per-site evaluation, inline or across a bounded process pool."""
    if workers <= 1 or len(positions) <= _CHUNK_SITES:
        return mapper.evaluate(positions)
    chunks = [
        positions[i : i + _CHUNK_SITES] for i in range(0, len(positions), _CHUNK_SITES)
    ]
    with ProcessPoolExecutor(
        max_workers=workers, initializer=_init_worker, initargs=(mapper,)
    ) as pool:
        parts = list(pool.map(_eval_chunk, chunks))
    return [r for part in parts for r in part]


def apply_criteria(results: list[SiteResult], config: ScenarioConfig) -> np.ndarray | None:
    """Fill per-site ranks for every configured criterion over one layer.

    Returns the population-mean threshold vector when that criterion ran,
    None otherwise. A layer with zero covered sites logs a warning and
    skips the mean criterion; relative criteria are scale-local and always
    apply.
    """
    spectra = spectra_matrix(results, config.n_elements)
    mean_thresholds = None
    for spec in config.rank_criteria:
        kind, factor = parse_criterion_spec(spec)
        label = criterion_label(spec)
        if kind == "rel":
            ranks = RelativeThreshold(factor).fit(spectra).predict(spectra)
        else:
            try:
                criterion = PopulationMeanThreshold(config.mean_population).fit(spectra)
            except ValueError as exc:
                log.warning("mean criterion skipped: %s", exc)
                continue
            mean_thresholds = criterion.means_
            ranks = criterion.predict(spectra)
        for site, rank in zip(results, ranks):
            if site.covered:
                site.ranks[label] = int(rank)
    return mean_thresholds


def run_sweep(config, workers: int = 1, out_dir=None) -> RunOutcome:
    """Run one scenario end to end; write artifacts when ``out_dir`` is set."""
    t_start = time.perf_counter()
    if not isinstance(config, ScenarioConfig):
        config = parse_config(config)
    scene = build_scene_from_config(config)
    mapper = make_mapper(config, scene)
    grid = build_grid(config)

    all_positions = np.vstack([pts for _, pts in grid])
    t_eval = time.perf_counter()
    all_results = evaluate_positions(mapper, all_positions, workers)
    eval_seconds = time.perf_counter() - t_eval

    layers: list[LayerOutcome] = []
    offset = 0
    for altitude, pts in grid:
        results = all_results[offset : offset + len(pts)]
        offset += len(pts)
        mean_thr = apply_criteria(results, config)
        layers.append(
            LayerOutcome(altitude, results, coverage_probabilities(results), mean_thr)
        )

    criteria = [criterion_label(spec) for spec in config.rank_criteria]
    manifest = _build_manifest(config, scene, layers, criteria, eval_seconds)

    out_path = None
    if out_dir is not None:
        out_path = Path(out_dir)
        out_path.mkdir(parents=True, exist_ok=True)
        outputs.write_sites_csv(out_path / "sites.csv", layers, criteria, config.n_elements)
        outputs.write_cdf_csv(out_path / "cdf.csv", layers, criteria)
        scales = outputs.write_heatmaps(out_path, layers, criteria, config.grid_shape)
        manifest["heatmap_scales"] = scales
        manifest["timings_s"]["total"] = round(time.perf_counter() - t_start, 3)
        outputs.write_manifest(out_path / "manifest.json", manifest)

    return RunOutcome(config, scene, layers, criteria, manifest, out_path)


def _build_manifest(
    config: ScenarioConfig,
    scene: Scene,
    layers: list[LayerOutcome],
    criteria: list[str],
    eval_seconds: float,
) -> dict:
    coverage = {}
    for layer in layers:
        st = layer.stats
        per_criterion = {}
        for label, hist in st.rank_counts.items():
            per_criterion[label] = {
                "rank_counts": {str(k): v for k, v in sorted(hist.items())},
                "p_r1": st.p_r1(label),
                "p_r1_exact": f"{hist.get(1, 0)}/{st.n_total}",
            }
        coverage[f"{layer.altitude_m:g}"] = {
            "n_total": st.n_total,
            "n_covered": st.n_total - st.n_z - st.n_b,
            "n_z": st.n_z,
            "n_b": st.n_b,
            "p_z": st.p_z,
            "p_b": st.p_b,
            "criteria": per_criterion,
            "mean_thresholds": (
                [float(v) for v in layer.mean_thresholds]
                if layer.mean_thresholds is not None
                else None
            ),
        }
    nx, ny = config.grid_shape
    return {
        "tool": "skytrace",
        "version": __version__,
        "scenario": config.name,
        "config_digest": config.source_digest,
        "scene_digest": scene.digest,
        "n_buildings": len(scene.buildings),
        "n_facets": len(scene),
        "grid": {"nx": nx, "ny": ny, "sites_per_altitude": nx * ny},
        "altitudes_m": list(config.altitudes_m),
        "criteria": criteria,
        "coverage": coverage,
        "timings_s": {"site_evaluation": round(eval_seconds, 3)},
    }
