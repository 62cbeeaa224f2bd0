"""Online charge scheduling and dispatch for an autonomous electric fleet.

The package simulates a fleet operator that must decide, one idle vehicle
at a time, where to charge and which pickup to serve next, against shared
charger, energy, generation, fleet-downtime, and arrival capacities. The
core dispatcher prices every resource with an exponential marginal-price
curve and accepts the highest-utility plan; offline bounds, exhaustive
search, and threshold baselines provide the reference points, and a
verification harness checks the pricing machinery numerically.
"""

from .constants import MONEY_ATOL
from .domain import (
    CapacityError, DispatchDecision, Facility, PriceBreakdown, Region,
    ResourceLedger, RunReport, ScenarioConfig, Schedule, Session, UNREACHABLE,
    Violation, hops, instance_hash, recompute_ledger, schedule_violations,
    validate,
)
from .economics import (
    INFEASIBLE, conj_cable, conj_destination, conj_energy, conj_generation,
    conj_out_of_service, dual_objective, generation_cost, is_infeasible,
    out_of_service_cost, primal_increment, primal_objective,
)
from .pricing import (
    Alphas, DaprReport, PriceBounds, alphas, dapr_cases, default_charge_targets,
    estimate_bounds, price_cable, price_destination, price_energy,
    price_generation, price_out_of_service, psi, validate_bounds, verify_dapr,
)
from .schedules import (
    DEFAULT_POLICY, GenerationPolicy, feasible_schedules, schedule_value,
    validate_policy,
)
from .dispatcher import DispatcherState, dispatch, run_online, utility
from .offline import OfflineResult, exact_offline, search_space_size, upper_bound
from .baselines import run_threshold, threshold_dispatch
from .harness import (
    ComparisonTable, ExperimentSpec, GeneratorParams, PRESETS, compare,
    generate_scenario, ingest_traces, read_config, read_report, read_sessions,
    run_experiment, write_config, write_report, write_sessions,
)

__version__ = "0.1.0"

__all__ = [
    "MONEY_ATOL", "CapacityError", "DispatchDecision", "Facility",
    "PriceBreakdown", "Region", "ResourceLedger", "RunReport",
    "ScenarioConfig", "Schedule", "Session", "UNREACHABLE", "Violation",
    "hops", "instance_hash", "recompute_ledger", "schedule_violations",
    "validate", "INFEASIBLE", "conj_cable", "conj_destination", "conj_energy",
    "conj_generation", "conj_out_of_service", "dual_objective",
    "generation_cost", "is_infeasible", "out_of_service_cost",
    "primal_increment", "primal_objective", "Alphas", "DaprReport",
    "PriceBounds", "alphas", "dapr_cases", "default_charge_targets",
    "estimate_bounds", "price_cable", "price_destination", "price_energy",
    "price_generation", "price_out_of_service", "psi", "validate_bounds",
    "verify_dapr", "DEFAULT_POLICY", "GenerationPolicy", "feasible_schedules",
    "schedule_value", "validate_policy", "DispatcherState", "dispatch",
    "run_online", "utility", "OfflineResult", "exact_offline",
    "search_space_size", "upper_bound", "run_threshold", "threshold_dispatch",
    "ComparisonTable", "ExperimentSpec", "GeneratorParams", "PRESETS",
    "compare", "generate_scenario", "ingest_traces", "read_config",
    "read_report", "read_sessions", "run_experiment", "write_config",
    "write_report", "write_sessions", "__version__",
]
