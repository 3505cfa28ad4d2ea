"""Residual risk, richness and extrapolation estimates for fuzzing campaigns."""

__version__ = "0.1.0"

from .bootstrap import BootstrapInterval, bootstrap_ci
from .errors import (
    DegenerateSeries,
    EmptyCampaign,
    FuzzAssureError,
    InvalidThreshold,
    ModelError,
    ParseError,
    SeriesTooShort,
)
from .estimators import (
    AssuranceReport,
    ExtrapolationCurve,
    chao1,
    extrapolate_risk,
    extrapolate_species,
    extrapolation_curve,
    feasible_coverage,
    full_report,
    good_turing,
    good_turing_se,
    stop_plan,
    stop_rule,
)
from .flakiness import TurningPointResult, turning_point_test
from .incidence import (
    Accumulator,
    CampaignSnapshot,
    IncidenceRecord,
    from_records,
    merge,
    observe,
    snapshot_stats,
)
from .simulator import GroundTruthModel, build_model, evaluate_estimators, simulate
