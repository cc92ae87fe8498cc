"""CDS fair-spread pricing: sequential oracle and concurrent dataflow engine."""

from .curves import (CurveKind, TermStructure, cumulative_hazard, default_probability,
                     discount_factor, interpolate_rate, survival_probability)
from .errors import CdsError, DomainError, PricingError, StageFailure, ValidationError
from .pipeline import EngineConfig, PipelineStats, run_pipeline
from .pricing import (LegValues, PricingFailure, SpreadResult, accrual_leg, fair_spread,
                      payoff_leg, premium_leg, price_batch, price_option)
from .reduce import LaneAccumulator, strided_sum, strided_weighted_sum
from .scaler import run_engines
from .schedule import CdsOption, TimeGrid, generate_time_points

__all__ = [
    "CdsError", "CdsOption", "CurveKind", "DomainError", "EngineConfig", "LaneAccumulator",
    "LegValues", "PipelineStats", "PricingError", "PricingFailure", "SpreadResult",
    "StageFailure", "TermStructure", "TimeGrid", "ValidationError", "accrual_leg",
    "cumulative_hazard", "default_probability", "discount_factor", "fair_spread",
    "generate_time_points", "interpolate_rate", "payoff_leg", "premium_leg", "price_batch",
    "price_option", "run_engines", "run_pipeline", "strided_sum", "strided_weighted_sum",
    "survival_probability",
]
