"""skytrace: deterministic site-specific radio ray tracing and air-to-ground
MIMO channel-rank mapping over receiver grids."""

from ._version import __version__
from .estimators import ChannelMapper, PopulationMeanThreshold, RelativeThreshold
from .geometry import (
    Building,
    Facet,
    Scene,
    is_inside_building,
    occluded,
    ray_facet_intersect,
)
from .ingest import (
    ConfigError,
    GeoOrigin,
    IngestError,
    ScenarioConfig,
    build_grid,
    enu_to_wgs84,
    load_buildings,
    parse_config,
    project_to_enu,
)
from .materials import BUILTIN_MATERIALS, Material, get_material
from .mimo import ArrayConfig, steering_vector, synthesize_channel
from .propagation import (
    PathEnumerator,
    PathSet,
    PropPath,
    attach_amplitudes,
    enumerate_paths,
    fresnel_gamma,
    path_amplitude,
    rssi,
)
from .rankanalysis import (
    CoverageStats,
    SiteResult,
    apply_threshold,
    condition_number_db,
    coverage_probabilities,
    ecdf,
    population_mean_thresholds,
    relative_threshold,
    singular_values,
)
from .sweep import RunOutcome, build_scene_from_config, run_sweep

__all__ = [
    "__version__",
    "ArrayConfig",
    "Building",
    "BUILTIN_MATERIALS",
    "ChannelMapper",
    "ConfigError",
    "CoverageStats",
    "Facet",
    "GeoOrigin",
    "IngestError",
    "Material",
    "PathEnumerator",
    "PathSet",
    "PopulationMeanThreshold",
    "PropPath",
    "RelativeThreshold",
    "RunOutcome",
    "Scene",
    "ScenarioConfig",
    "SiteResult",
    "apply_threshold",
    "attach_amplitudes",
    "build_grid",
    "build_scene_from_config",
    "condition_number_db",
    "coverage_probabilities",
    "ecdf",
    "enu_to_wgs84",
    "enumerate_paths",
    "fresnel_gamma",
    "get_material",
    "is_inside_building",
    "load_buildings",
    "occluded",
    "parse_config",
    "path_amplitude",
    "population_mean_thresholds",
    "project_to_enu",
    "ray_facet_intersect",
    "relative_threshold",
    "rssi",
    "run_sweep",
    "singular_values",
    "steering_vector",
    "synthesize_channel",
]
