"""Bandwidth selectors h1-h7 for the directional kernel density estimator."""
from __future__ import annotations

from .bootstrap import BootstrapMise, HausdorffRisk, h1_bootstrap_hausdorff, h6_bootstrap_mise
from .cv import h4_lscv, h5_lcv, lcv_objective, lscv_objective
from .em import MixtureFit, em_fit_vm_mixture
from .optimize import (
    SELECTOR_IDS,
    BoundaryHitWarning,
    DegenerateDataError,
    SelectionResult,
    SelectorConfig,
    SelectorError,
    UniformDataError,
    minimize_scalar,
)
from .plugin import amise, curvature, h3_oliveira
from .rules import h2_taylor, h7_rot, kappa_mle

SELECTORS = {
    "h1": h1_bootstrap_hausdorff,
    "h2": h2_taylor,
    "h3": h3_oliveira,
    "h4": h4_lscv,
    "h5": h5_lcv,
    "h6": h6_bootstrap_mise,
    "h7": h7_rot,
}
CIRCLE_ONLY = {"h2", "h3", "h6"}


def select_bandwidth(sample, selector: str, config: SelectorConfig | None = None) -> SelectionResult:
    """Run selector ``"h1"`` ... ``"h7"`` on `sample`."""
    if selector not in SELECTORS:
        raise KeyError(f"unknown selector {selector!r}; expected one of {', '.join(SELECTOR_IDS)}")
    res = SELECTORS[selector](sample, config or SelectorConfig())
    res.selector = selector
    return res


__all__ = [
    "SELECTORS", "SELECTOR_IDS", "CIRCLE_ONLY", "select_bandwidth", "SelectorConfig", "SelectionResult",
    "SelectorError", "UniformDataError", "DegenerateDataError", "BoundaryHitWarning", "minimize_scalar",
    "h1_bootstrap_hausdorff", "h2_taylor", "h3_oliveira", "h4_lscv", "h5_lcv", "h6_bootstrap_mise", "h7_rot",
    "em_fit_vm_mixture", "MixtureFit", "kappa_mle", "amise", "curvature", "lscv_objective", "lcv_objective",
    "BootstrapMise", "HausdorffRisk",
]
