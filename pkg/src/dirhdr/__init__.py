"""Highest density regions for circular and spherical data."""
from .geometry import EvalGrid, angle_to_unit, chord_distance, lonlat_to_unit, make_grid, unit_to_angle, unit_to_lonlat
from .kde import KdeEstimate, kde_eval, kde_eval_grid, kde_loo_eval
from .levelsets import (
    BoundarySet,
    EmptyBoundary,
    Region,
    ThresholdEstimate,
    count_components,
    estimate_threshold,
    extract_boundary,
    hdr_region,
    level_set_fixed,
    region_probability,
    true_hdr_region,
    true_threshold,
)
from .metrics import hausdorff, hdr_error, min_set_distance
from .vmf import MixtureModel, VonMisesFisher, load_benchmark, load_mixture_config, sample_mixture, sample_vmf

__version__ = "0.1.0"
