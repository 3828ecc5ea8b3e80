"""Exact-rational laboratory for maximal averages over box families.

Grids carry sets as bitmasks, families generate box-union elements,
and every average, threshold, and measure is an exact Fraction. The
modules build on each other: grid -> basis -> maximal -> (halo,
tauber, augment) -> cli.
"""

from .errors import (
    BudgetExceededError,
    ConfigError,
    EmptyWitnessFamilyError,
    GeometryMismatchError,
    HaloLabError,
    InternalError,
    RasterizeError,
)
from .grid import CellSet, GridGeometry, box_mask, parse_rational, random_set
from .basis import (
    BasisElement,
    BasisFamily,
    Box,
    JumpParams,
    count_elements,
    elements_through,
    enumerate_elements,
    rasterize_box,
    rasterize_jump,
)
from .maximal import (
    MaximalField,
    SummedAreaTable,
    average,
    maximal_field,
    superlevel,
    superlevel_direct,
)
from .halo import (
    HaloCurve,
    HaloPoint,
    JumpReport,
    continuity_scan,
    exact_discrete_halo,
    halo_curve,
    halo_ratio,
    halo_search,
)
from .tauber import (
    ChainedBoundReport,
    ContainmentReport,
    GapReport,
    GapRung,
    HaloOrbit,
    IterationParams,
    chained_bound_report,
    containment_experiment,
    halo_orbit,
    k_alpha_gamma,
    least_power_at_least,
    strict_gap_report,
)
from .augment import (
    AugmentPlan,
    LemmaChainReport,
    WitnessCheck,
    WitnessFamily,
    augment_set,
    lemma_chain_report,
    witness_family,
)

__version__ = "0.1.0"

__all__ = [
    "AugmentPlan",
    "BasisElement",
    "BasisFamily",
    "Box",
    "BudgetExceededError",
    "CellSet",
    "ChainedBoundReport",
    "ConfigError",
    "ContainmentReport",
    "EmptyWitnessFamilyError",
    "GapReport",
    "GapRung",
    "GeometryMismatchError",
    "GridGeometry",
    "HaloCurve",
    "HaloLabError",
    "HaloOrbit",
    "HaloPoint",
    "InternalError",
    "IterationParams",
    "JumpParams",
    "JumpReport",
    "LemmaChainReport",
    "MaximalField",
    "RasterizeError",
    "SummedAreaTable",
    "WitnessCheck",
    "WitnessFamily",
    "average",
    "augment_set",
    "box_mask",
    "chained_bound_report",
    "containment_experiment",
    "continuity_scan",
    "count_elements",
    "elements_through",
    "enumerate_elements",
    "exact_discrete_halo",
    "halo_curve",
    "halo_orbit",
    "halo_ratio",
    "halo_search",
    "k_alpha_gamma",
    "least_power_at_least",
    "lemma_chain_report",
    "maximal_field",
    "parse_rational",
    "random_set",
    "rasterize_box",
    "rasterize_jump",
    "strict_gap_report",
    "superlevel",
    "superlevel_direct",
    "witness_family",
]
