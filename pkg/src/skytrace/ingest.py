"""Scenario inputs: GeoJSON building footprints and the run-plan config file.

Building footprints arrive as an RFC 7946 FeatureCollection of Polygons
carrying a numeric ``height`` (meters) or ``levels`` property. Coordinates
are projected onto a local east-north tangent plane about a configured
origin; target areas are under a kilometer across, so the equirectangular
projection distorts by less than 1e-4 relative, negligible against the
grid resolution.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .geometry import Building
from .materials import BUILTIN_MATERIALS, Material

log = logging.getLogger(__name__)

EARTH_RADIUS_M = 6378137.0
DEFAULT_LEVEL_HEIGHT_M = 3.0


class IngestError(ValueError):
    """Malformed GeoJSON or scenario config input."""


class ConfigError(IngestError):
    """Invalid scenario configuration."""


@dataclass(frozen=True)
class GeoOrigin:
    """Tangent-plane origin for the local east-north frame."""

    lat0: float
    lon0: float

    def __post_init__(self) -> None:
        if not (abs(self.lat0) <= 90.0 and abs(self.lon0) <= 180.0):
            raise ConfigError(f"origin out of range: lat={self.lat0}, lon={self.lon0}")


def project_to_enu(lat: float, lon: float, origin: GeoOrigin) -> tuple[float, float]:
    """Equirectangular projection of (lat, lon) degrees to local (east, north) meters."""
    x = EARTH_RADIUS_M * math.cos(math.radians(origin.lat0)) * math.radians(lon - origin.lon0)
    y = EARTH_RADIUS_M * math.radians(lat - origin.lat0)
    return x, y


def enu_to_wgs84(x: float, y: float, origin: GeoOrigin) -> tuple[float, float]:
    """Inverse of :func:`project_to_enu`."""
    lat = origin.lat0 + math.degrees(y / EARTH_RADIUS_M)
    lon = origin.lon0 + math.degrees(x / (EARTH_RADIUS_M * math.cos(math.radians(origin.lat0))))
    return lat, lon


def _feature_height(props: dict, level_height_m: float):
    for key, scale in (("height", 1.0), ("levels", level_height_m)):
        if key in props and props[key] is not None:
            try:
                return float(props[key]) * scale
            except (TypeError, ValueError):
                return None
    return None


def load_buildings(
    geojson_text: str | bytes,
    origin: GeoOrigin,
    level_height_m: float = DEFAULT_LEVEL_HEIGHT_M,
) -> list[Building]:
    """Parse a GeoJSON FeatureCollection of building footprints.

    Features missing both ``height`` and ``levels`` or with
    self-intersecting footprints are skipped with a logged warning; the
    run continues with the remaining features. ``levels`` converts at
    ``level_height_m`` meters per level (OSM Simple 3D Buildings default).
    """
    if isinstance(geojson_text, bytes):
        geojson_text = geojson_text.decode("utf-8")
    try:
        doc = json.loads(geojson_text)
    except json.JSONDecodeError as exc:
        raise IngestError(
            f"malformed GeoJSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise IngestError("expected a GeoJSON FeatureCollection")

    buildings: list[Building] = []
    for i, feature in enumerate(doc.get("features", [])):
        fid = feature.get("id", feature.get("properties", {}).get("id", i))
        geom = feature.get("geometry") or {}
        if geom.get("type") != "Polygon":
            log.warning("feature %s: skipping non-Polygon geometry %r", fid, geom.get("type"))
            continue
        height = _feature_height(feature.get("properties") or {}, level_height_m)
        if height is None or height <= 0:
            log.warning("feature %s: no usable height/levels property, skipped", fid)
            continue
        rings = geom.get("coordinates") or []
        if not rings:
            log.warning("feature %s: empty polygon, skipped", fid)
            continue
        if len(rings) > 1:
            log.warning("feature %s: interior rings ignored (holes unsupported)", fid)
        ring = rings[0]
        if len(ring) >= 2 and ring[0] == ring[-1]:
            ring = ring[:-1]
        try:
            xy = np.array([project_to_enu(lat, lon, origin) for lon, lat in ring])
            buildings.append(Building(xy, height))
        except ValueError as exc:
            log.warning("feature %s: rejected footprint (%s)", fid, exc)
    return buildings


# Every key a scenario config may contain, with its parser. Unknown keys are
# hard errors so a typo in a threshold setting cannot pass silently.
def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in s.replace(",", " ").split())


def _str_list(s: str) -> tuple[str, ...]:
    return tuple(tok.strip() for tok in s.split(",") if tok.strip())


_CONFIG_KEYS: dict[str, object] = {
    "name": str,
    "buildings_geojson": str,
    "origin_lat_deg": float,
    "origin_lon_deg": float,
    "carrier_freq_hz": float,
    "tx_power_w": float,
    "tx_lat_deg": float,
    "tx_lon_deg": float,
    "tx_east_m": float,
    "tx_north_m": float,
    "tx_height_m": float,
    "altitudes_m": _floats,
    "grid_resolution_m": float,
    "area_width_m": float,
    "area_depth_m": float,
    "area_center_east_m": float,
    "area_center_north_m": float,
    "max_reflections": int,
    "n_elements": int,
    "d_tx_wavelengths": float,
    "d_rx_wavelengths": float,
    "tx_array_axis": _floats,
    "rx_array_axis": _floats,
    "ground_material": str,
    "building_material": str,
    "ground_rel_permittivity": float,
    "ground_conductivity_s_m": float,
    "building_rel_permittivity": float,
    "building_conductivity_s_m": float,
    "rank_criteria": _str_list,
    "rssi_sum_mode": str,
    "mean_population": str,
    "level_height_m": float,
}


@dataclass
class ScenarioConfig:
    """Validated run plan for one scenario."""

    name: str = "scenario"
    buildings_geojson: Path | None = None
    origin: GeoOrigin | None = None
    carrier_freq_hz: float = 3.4e9
    tx_power_w: float = 10.0
    tx_east_m: float = 0.0
    tx_north_m: float = 0.0
    tx_height_m: float = 10.0
    altitudes_m: tuple[float, ...] = (3.0, 30.0, 70.0, 110.0)
    grid_resolution_m: float = 20.0
    area_width_m: float = 580.0
    area_depth_m: float = 460.0
    area_center_east_m: float = 0.0
    area_center_north_m: float = 0.0
    max_reflections: int = 2
    n_elements: int = 4
    d_tx_wavelengths: float = 1.0
    d_rx_wavelengths: float = 0.5
    tx_array_axis: tuple[float, ...] = (1.0, 0.0, 0.0)
    rx_array_axis: tuple[float, ...] = (1.0, 0.0, 0.0)
    ground_material: Material = BUILTIN_MATERIALS["perfect"]
    building_material: Material = BUILTIN_MATERIALS["concrete"]
    rank_criteria: tuple[str, ...] = ("mean", "rel:10", "rel:100", "rel:10000")
    rssi_sum_mode: str = "coherent"
    mean_population: str = "covered"
    level_height_m: float = DEFAULT_LEVEL_HEIGHT_M
    source_digest: str = field(default="", repr=False)

    def __post_init__(self) -> None:
        for key in ("carrier_freq_hz", "tx_power_w", "grid_resolution_m", "area_width_m",
                    "area_depth_m", "d_tx_wavelengths", "d_rx_wavelengths", "level_height_m"):
            if getattr(self, key) <= 0:
                raise ConfigError(f"{key} must be > 0")
        if self.max_reflections not in (0, 1, 2):
            raise ConfigError("max_reflections must be 0, 1, or 2")
        if self.n_elements < 1:
            raise ConfigError("n_elements must be >= 1")
        if not self.altitudes_m:
            raise ConfigError("altitudes_m must not be empty")
        if len(set(self.altitudes_m)) != len(self.altitudes_m):
            raise ConfigError("altitudes_m must be distinct")
        if any(a <= 0 for a in self.altitudes_m):
            raise ConfigError("altitudes_m must all be > 0")
        if self.tx_height_m <= 0:
            raise ConfigError("tx_height_m must be > 0")
        nx, ny = self.grid_shape
        if nx < 2 or ny < 2:
            raise ConfigError("area extent must allow at least 2 grid points per axis")
        for key in ("tx_array_axis", "rx_array_axis"):
            axis = np.asarray(getattr(self, key), dtype=float)
            if axis.shape != (3,) or np.linalg.norm(axis) < 1e-12:
                raise ConfigError(f"{key} must be a nonzero 3-vector")
            setattr(self, key, tuple(axis / np.linalg.norm(axis)))
        if self.rssi_sum_mode not in ("coherent", "incoherent"):
            raise ConfigError("rssi_sum_mode must be 'coherent' or 'incoherent'")
        if self.mean_population not in ("covered", "all"):
            raise ConfigError("mean_population must be 'covered' or 'all'")
        for crit in self.rank_criteria:
            parse_criterion_spec(crit)

    @property
    def wavelength_m(self) -> float:
        return 299792458.0 / self.carrier_freq_hz

    @property
    def tx_position(self) -> np.ndarray:
        return np.array([self.tx_east_m, self.tx_north_m, self.tx_height_m])

    @property
    def grid_shape(self) -> tuple[int, int]:
        nx = int(math.floor(self.area_width_m / self.grid_resolution_m + 1e-9)) + 1
        ny = int(math.floor(self.area_depth_m / self.grid_resolution_m + 1e-9)) + 1
        return nx, ny


def parse_criterion_spec(spec: str) -> tuple[str, float]:
    """Parse a rank-criterion token: ``mean`` or ``rel:<factor>``."""
    spec = spec.strip()
    if spec == "mean":
        return "mean", 0.0
    if spec.startswith("rel:"):
        try:
            factor = float(spec[4:])
        except ValueError:
            raise ConfigError(f"bad rank criterion {spec!r}") from None
        if factor <= 1.0:
            raise ConfigError(f"rank criterion factor must be > 1, got {factor}")
        return "rel", factor
    raise ConfigError(f"unknown rank criterion {spec!r} (use 'mean' or 'rel:<factor>')")


def criterion_label(spec: str) -> str:
    kind, factor = parse_criterion_spec(spec)
    return "mean" if kind == "mean" else f"rel{factor:g}"


def parse_config(path: str | Path) -> ScenarioConfig:
    """Read a ``key = value`` scenario file into a validated ScenarioConfig."""
    path = Path(path)
    raw = path.read_bytes()
    values: dict[str, object] = {}
    for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path.name}:{lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path.name}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path.name}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _CONFIG_KEYS[key](val)  # type: ignore[operator]
        except ValueError as exc:
            raise ConfigError(f"{path.name}:{lineno}: bad value for {key!r}: {exc}") from None

    origin = None
    if "origin_lat_deg" in values or "origin_lon_deg" in values:
        if not ("origin_lat_deg" in values and "origin_lon_deg" in values):
            raise ConfigError("origin_lat_deg and origin_lon_deg must be given together")
        origin = GeoOrigin(values.pop("origin_lat_deg"), values.pop("origin_lon_deg"))

    tx_geo = ("tx_lat_deg" in values, "tx_lon_deg" in values)
    tx_enu = ("tx_east_m" in values, "tx_north_m" in values)
    if any(tx_geo) and any(tx_enu):
        raise ConfigError("give the transmitter as lat/lon or east/north, not both")
    if any(tx_geo):
        if not all(tx_geo):
            raise ConfigError("tx_lat_deg and tx_lon_deg must be given together")
        if origin is None:
            raise ConfigError("tx_lat_deg/tx_lon_deg require an origin_lat_deg/origin_lon_deg")
        e, n = project_to_enu(values.pop("tx_lat_deg"), values.pop("tx_lon_deg"), origin)
        values["tx_east_m"], values["tx_north_m"] = e, n

    geojson = values.pop("buildings_geojson", None)
    if geojson is not None:
        geojson = (path.parent / geojson).resolve()
        if origin is None:
            raise ConfigError("buildings_geojson requires origin_lat_deg/origin_lon_deg")

    ground = _resolve_material(
        values.pop("ground_material", "perfect"),
        values.pop("ground_rel_permittivity", None),
        values.pop("ground_conductivity_s_m", None),
    )
    building = _resolve_material(
        values.pop("building_material", "concrete"),
        values.pop("building_rel_permittivity", None),
        values.pop("building_conductivity_s_m", None),
    )

    return ScenarioConfig(
        origin=origin,
        buildings_geojson=geojson,
        ground_material=ground,
        building_material=building,
        source_digest=hashlib.sha256(raw).hexdigest(),
        **values,  # type: ignore[arg-type]
    )


def _resolve_material(name: str, rel_permittivity, conductivity) -> Material:
    if name not in BUILTIN_MATERIALS:
        known = ", ".join(sorted(BUILTIN_MATERIALS))
        raise ConfigError(f"unknown material {name!r}; built-ins: {known}")
    mat = BUILTIN_MATERIALS[name]
    overrides = {}
    if rel_permittivity is not None:
        overrides["rel_permittivity"] = rel_permittivity
    if conductivity is not None:
        overrides["conductivity_s_m"] = conductivity
    if overrides:
        if mat.perfect_reflector:
            raise ConfigError("electrical overrides are meaningless for the perfect reflector")
        mat = replace(mat, name=f"{name}(custom)", **overrides)
    return mat


def build_grid(config: ScenarioConfig) -> list[tuple[float, np.ndarray]]:
    """Receiver positions per altitude: a uniform grid centered on the area origin.

    Points are ordered row-major (north rows outer, east columns inner),
    identically for every altitude layer.
    """
    nx, ny = config.grid_shape
    res = config.grid_resolution_m
    cx, cy = config.area_center_east_m, config.area_center_north_m
    xs = cx + (np.arange(nx) - (nx - 1) / 2.0) * res
    ys = cy + (np.arange(ny) - (ny - 1) / 2.0) * res
    gx, gy = np.meshgrid(xs, ys)  # shape (ny, nx), row-major over y then x
    layers = []
    for alt in config.altitudes_m:
        pts = np.column_stack([gx.ravel(), gy.ravel(), np.full(nx * ny, float(alt))])
        layers.append((float(alt), pts))
    return layers
