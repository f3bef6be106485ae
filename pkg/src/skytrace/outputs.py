"""Artifact writers: site table, ECDF table, heatmap images, manifest.

CSV writers format floats with a fixed ``%.10g``-style rule so reruns of
the same scenario produce byte-identical files. Heatmaps are lossless PNGs
with one pixel block per grid cell; the color scale range lives in the
manifest (no burned-in colorbars), Z sites render light gray, B sites dark
gray, and covered-but-undefined cells white.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import matplotlib
import numpy as np
from PIL import Image

from .rankanalysis import ecdf

Z_COLOR = (204, 204, 204)
B_COLOR = (64, 64, 64)
NODATA_COLOR = (255, 255, 255)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float) and math.isnan(value):
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".10g")


def write_sites_csv(path: Path, layers, criteria: list[str], n_elements: int) -> None:
    """One row per (altitude, site) in deterministic grid order."""
    header = (
        ["x_m", "y_m", "z_m", "flag", "rssi_dbm"]
        + [f"sigma{i + 1}" for i in range(n_elements)]
        + [f"rank_{label}" for label in criteria]
        + ["cn_db"]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for layer in layers:
            for site in layer.results:
                sigma = (
                    [_fmt(v) for v in site.sigma]
                    if site.sigma is not None
                    else [""] * n_elements
                )
                ranks = [
                    _fmt(site.ranks[label]) if label in site.ranks else ""
                    for label in criteria
                ]
                writer.writerow(
                    [_fmt(site.position[0]), _fmt(site.position[1]), _fmt(site.position[2]),
                     site.flag, _fmt(site.rssi_dbm)]
                    + sigma
                    + ranks
                    + [_fmt(site.cn_db)]
                )


def write_cdf_csv(path: Path, layers, criteria: list[str]) -> None:
    """Empirical CDF breakpoints for RSSI, per-criterion rank, and CN."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["metric", "criterion", "altitude_m", "breakpoint", "probability"])
        for layer in layers:
            alt = _fmt(layer.altitude_m)
            rssi_vals = [
                r.rssi_dbm
                for r in layer.results
                if r.rssi_dbm is not None and math.isfinite(r.rssi_dbm)
            ]
            for x, p in zip(*ecdf(rssi_vals)):
                writer.writerow(["rssi_dbm", "", alt, _fmt(x), _fmt(p)])
            for label in criteria:
                ranks = [r.ranks[label] for r in layer.results if label in r.ranks]
                for x, p in zip(*ecdf(ranks)):
                    writer.writerow(["rank", label, alt, _fmt(x), _fmt(p)])
            cn_vals = [r.cn_db for r in layer.results if r.cn_db is not None]
            for x, p in zip(*ecdf(cn_vals)):
                writer.writerow(["cn_db", "", alt, _fmt(x), _fmt(p)])


def write_heatmap(
    path: Path,
    values: np.ndarray,
    flags: np.ndarray,
    cell_px: int = 8,
    cmap: str = "viridis",
    vmin: float | None = None,
    vmax: float | None = None,
) -> tuple[float, float]:
    """Render one (ny, nx) scalar layer to a PNG; returns the color range.

    ``values`` holds NaN where no datum exists; ``flags`` carries the
    covered/Z/B classification per cell. North (largest y row) ends up at
    the top of the image.
    """
    finite = np.isfinite(values)
    if vmin is None:
        vmin = float(values[finite].min()) if finite.any() else 0.0
    if vmax is None:
        vmax = float(values[finite].max()) if finite.any() else 1.0
    span = vmax - vmin
    norm = np.clip((values - vmin) / (span if span > 0 else 1.0), 0.0, 1.0)
    norm = np.where(finite, norm, 0.0)
    if span <= 0:
        norm = np.where(finite, 0.5, 0.0)

    rgba = matplotlib.colormaps[cmap](norm)
    rgb = (rgba[..., :3] * 255).astype(np.uint8)
    rgb[~finite] = NODATA_COLOR
    rgb[flags == "Z"] = Z_COLOR
    rgb[flags == "B"] = B_COLOR

    rgb = np.flipud(rgb)
    rgb = np.repeat(np.repeat(rgb, cell_px, axis=0), cell_px, axis=1)
    Image.fromarray(rgb, mode="RGB").save(path, format="PNG")
    return vmin, vmax


def write_heatmaps(out_dir: Path, layers, criteria: list[str], grid_shape) -> dict:
    """All per-altitude layers: RSSI, rank per criterion, condition number."""
    nx, ny = grid_shape
    scales: dict[str, list[float]] = {}
    for layer in layers:
        tag = f"alt{layer.altitude_m:g}"
        flags = np.array([r.flag for r in layer.results]).reshape(ny, nx)

        planes = {
            "rssi_dbm": np.array(
                [r.rssi_dbm if r.rssi_dbm is not None else np.nan for r in layer.results]
            ),
            "cn_db": np.array(
                [r.cn_db if r.cn_db is not None else np.nan for r in layer.results]
            ),
        }
        for label in criteria:
            planes[f"rank_{label}"] = np.array(
                [float(r.ranks[label]) if label in r.ranks else np.nan for r in layer.results]
            )

        for name, vals in planes.items():
            vmin, vmax = write_heatmap(
                out_dir / f"{tag}_{name}.png", vals.reshape(ny, nx), flags
            )
            scales[f"{tag}_{name}"] = [vmin, vmax]
    return scales


def write_manifest(path: Path, manifest: dict) -> None:
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
