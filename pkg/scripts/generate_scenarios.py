#!/usr/bin/env python3
"""Regenerate the bundled scenario files under scenarios/.

Layouts are deterministic (fixed RNG seeds), so reruns reproduce the
committed artifacts byte for byte. The Centennial / Lake Wheeler building
sets are invented stand-ins at approximate coordinates; treat them as
illustrative, not as survey data.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from skytrace.geometry import Scene, is_inside_building
from skytrace.ingest import GeoOrigin, enu_to_wgs84, load_buildings, parse_config

OUT = Path(__file__).resolve().parents[1] / "scenarios"


def rect(cx: float, cy: float, w: float, d: float) -> np.ndarray:
    return np.array(
        [
            [cx - w / 2, cy - d / 2],
            [cx + w / 2, cy - d / 2],
            [cx + w / 2, cy + d / 2],
            [cx - w / 2, cy + d / 2],
        ]
    )


def to_feature(xy: np.ndarray, height: float, origin: GeoOrigin, fid: int) -> dict:
    ring = []
    for x, y in xy:
        lat, lon = enu_to_wgs84(float(x), float(y), origin)
        ring.append([round(lon, 9), round(lat, 9)])
    ring.append(ring[0])
    return {
        "type": "Feature",
        "id": fid,
        "properties": {"height": round(float(height), 2)},
        "geometry": {"type": "Polygon", "coordinates": [ring]},
    }


def write_geojson(path: Path, footprints, origin: GeoOrigin) -> None:
    fc = {
        "type": "FeatureCollection",
        "features": [to_feature(xy, h, origin, i) for i, (xy, h) in enumerate(footprints)],
    }
    path.write_text(json.dumps(fc, indent=1) + "\n")


def keep_clear(xy: np.ndarray, spots, clearance: float) -> bool:
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    for sx, sy in spots:
        dx = max(lo[0] - sx, 0.0, sx - hi[0])
        dy = max(lo[1] - sy, 0.0, sy - hi[1])
        if np.hypot(dx, dy) < clearance:
            return False
    return True


def urban_canyon() -> list:
    """Exactly 20 slab buildings, 10-30 m tall, on a jittered 5x4 lattice
    over the 580 x 460 m area, with the transmitter spot kept clear."""
    rng = np.random.default_rng(42)
    xs = np.linspace(-230, 230, 5)
    ys = np.linspace(-180, 180, 4)
    footprints = []
    for j, cy in enumerate(ys):
        for i, cx in enumerate(xs):
            w = rng.uniform(50, 95) if j % 2 == 0 else rng.uniform(35, 60)
            d = rng.uniform(25, 45) if j % 2 == 0 else rng.uniform(35, 70)
            jx, jy = rng.uniform(-15, 15, size=2)
            h = rng.uniform(10.0, 30.0)
            xy = rect(cx + jx, cy + jy, w, d)
            if not keep_clear(xy, [(0.0, 0.0)], 30.0):
                # push the block away from the transmitter, preserving size
                shift = 40.0 * np.sign([cx + jx or 1.0, cy + jy or 1.0])
                xy = rect(cx + jx + shift[0], cy + jy + shift[1], w, d)
            footprints.append((xy, h))
    assert len(footprints) == 20
    return footprints


def campus_blocks() -> list:
    """Invented campus-like blocks for the CC1/CC2 examples."""
    rng = np.random.default_rng(7)
    footprints = []
    xs = np.linspace(-250, 250, 6)
    ys = np.linspace(-190, 190, 5)
    tx_spots = [(-180.0, -120.0), (150.0, 100.0)]  # CC1, CC2 ENU spots
    for cy in ys:
        for cx in xs:
            if rng.uniform() < 0.35:
                continue
            w, d = rng.uniform(30, 75), rng.uniform(25, 60)
            jx, jy = rng.uniform(-18, 18, size=2)
            h = rng.uniform(8.0, 28.0)
            xy = rect(cx + jx, cy + jy, w, d)
            if not keep_clear(xy, tx_spots, 25.0):
                continue
            footprints.append((xy, h))
    return footprints


def lake_wheeler_sheds() -> list:
    """Two barn-like structures near the LW1 spot in an otherwise open field."""
    return [
        (rect(60.0, 35.0, 45.0, 20.0), 9.0),
        (rect(-80.0, -50.0, 30.0, 18.0), 7.5),
    ]


CONFIG_TEMPLATES = {
    "urban_canyon.cfg": """\
# Synthetic urban canyon: 20 buildings (10-30 m) over a 580 x 460 m area.
# Deterministic layout produced by scripts/generate_scenarios.py.
name = urban_canyon
origin_lat_deg = 0.0
origin_lon_deg = 0.0
buildings_geojson = urban_canyon.geojson
carrier_freq_hz = 3.4e9
tx_power_w = 10
tx_east_m = 0
tx_north_m = 0
tx_height_m = 10
altitudes_m = 3, 30, 70, 110
grid_resolution_m = 20
area_width_m = 580
area_depth_m = 460
max_reflections = 2
n_elements = 4
d_tx_wavelengths = 1.0
d_rx_wavelengths = 0.5
ground_material = concrete
building_material = concrete
rank_criteria = mean, rel:10, rel:100, rel:10000
rssi_sum_mode = coherent
""",
    "open_field.cfg": """\
# Open rural field: no buildings, vegetation ground, 740 x 600 m area.
name = open_field
carrier_freq_hz = 3.4e9
tx_power_w = 10
tx_east_m = 0
tx_north_m = 0
tx_height_m = 10
altitudes_m = 3, 30, 70, 110
grid_resolution_m = 20
area_width_m = 740
area_depth_m = 600
max_reflections = 2
ground_material = vegetation
rank_criteria = mean, rel:10, rel:100, rel:10000
rssi_sum_mode = coherent
""",
    "cc1.cfg": """\
# Campus-urban example, low tower. Coordinates are APPROXIMATE and the
# building set is an invented stand-in; regenerate via scripts/.
name = cc1
origin_lat_deg = 35.770000
origin_lon_deg = -78.677000
buildings_geojson = centennial_approx.geojson
carrier_freq_hz = 3.4e9
tx_power_w = 10
tx_east_m = -180
tx_north_m = -120
tx_height_m = 10
altitudes_m = 3, 30, 70, 110
grid_resolution_m = 20
area_width_m = 580
area_depth_m = 460
max_reflections = 2
ground_material = perfect
building_material = concrete
rank_criteria = mean, rel:10, rel:100, rel:10000
""",
    "cc2.cfg": """\
# Campus-urban example, tall tower (25 m). Approximate coordinates.
name = cc2
origin_lat_deg = 35.770000
origin_lon_deg = -78.677000
buildings_geojson = centennial_approx.geojson
carrier_freq_hz = 3.4e9
tx_power_w = 10
tx_east_m = 150
tx_north_m = 100
tx_height_m = 25
altitudes_m = 3, 30, 70, 110
grid_resolution_m = 20
area_width_m = 580
area_depth_m = 460
max_reflections = 2
ground_material = perfect
building_material = concrete
rank_criteria = mean, rel:10, rel:100, rel:10000
""",
    "lw1.cfg": """\
# Open rural example with two sheds near the tower. Approximate coordinates.
name = lw1
origin_lat_deg = 35.709500
origin_lon_deg = -78.699600
buildings_geojson = lake_wheeler_approx.geojson
carrier_freq_hz = 3.4e9
tx_power_w = 10
tx_east_m = 0
tx_north_m = 0
tx_height_m = 10
altitudes_m = 3, 30, 70, 110
grid_resolution_m = 20
area_width_m = 740
area_depth_m = 600
max_reflections = 2
ground_material = vegetation
building_material = concrete
rank_criteria = mean, rel:10, rel:100, rel:10000
""",
}


def validate(cfg_path: Path) -> None:
    config = parse_config(cfg_path)
    buildings = []
    if config.buildings_geojson:
        buildings = load_buildings(
            Path(config.buildings_geojson).read_text(), config.origin
        )
    scene = Scene.build(
        buildings,
        config.ground_material,
        config.building_material,
        bounds=[
            [-config.area_width_m / 2, -config.area_depth_m / 2],
            [config.area_width_m / 2, config.area_depth_m / 2],
        ],
    )
    assert not is_inside_building(config.tx_position, scene), f"{cfg_path.name}: tx indoors"
    print(f"{cfg_path.name}: {len(buildings)} buildings OK")


def main() -> None:
    OUT.mkdir(exist_ok=True)
    write_geojson(OUT / "urban_canyon.geojson", urban_canyon(), GeoOrigin(0.0, 0.0))
    write_geojson(
        OUT / "centennial_approx.geojson", campus_blocks(), GeoOrigin(35.770000, -78.677000)
    )
    write_geojson(
        OUT / "lake_wheeler_approx.geojson",
        lake_wheeler_sheds(),
        GeoOrigin(35.709500, -78.699600),
    )
    for name, text in CONFIG_TEMPLATES.items():
        (OUT / name).write_text(text)
    for name in CONFIG_TEMPLATES:
        validate(OUT / name)


if __name__ == "__main__":
    main()
