"""Sizing of shaped discharge services for heterogeneous storage fleets.

Deterministic sizing compares a request's energy-above-threshold curve
against the fleet's capacity curve; stochastic availability is handled by
a Monte Carlo chance-constrained solver with a single-curve quantile
approximation, and a paired benchmark pits the curve check against
time-stepped policy simulation.
"""

from .bench import BenchReport, run_bench
from .casegen import CASE_STUDY_GROUPS, DeviceGroup, LogNormalSpec, generate, generate_case_study
from .chance import (
    AvailabilityModel,
    CcSolution,
    QuantileCurve,
    bootstrap_ci,
    cc_solve,
    draw_availability_ensemble,
    max_magnitude_vs_quantile,
    order_statistic_index,
    quantile_curve,
    sample_availability,
    sample_max_magnitudes,
    solution_from_magnitudes,
)
from .curves import EnergyCurve, capacity_curve, demand_curve, dominated_by
from .dispatch import DispatchStep, policy_step, simulate_feasible
from .fleet import (
    Device,
    Fleet,
    apply_availability,
    fleet_from_arrays,
    read_fleet_csv,
    time_to_go,
    total_energy,
    total_power,
    write_fleet_csv,
)
from .magnitude import dominance_oracle, max_magnitude, simulation_oracle
from .profiles import (
    RequestProfile,
    discretize,
    energy,
    peak,
    pulse,
    read_profile_json,
    scale,
    trapezoid,
    write_profile_json,
)

__version__ = "0.1.0"

__all__ = [
    "AvailabilityModel",
    "BenchReport",
    "CASE_STUDY_GROUPS",
    "CcSolution",
    "Device",
    "DeviceGroup",
    "DispatchStep",
    "EnergyCurve",
    "Fleet",
    "LogNormalSpec",
    "QuantileCurve",
    "RequestProfile",
    "apply_availability",
    "bootstrap_ci",
    "capacity_curve",
    "cc_solve",
    "demand_curve",
    "discretize",
    "dominance_oracle",
    "dominated_by",
    "draw_availability_ensemble",
    "energy",
    "fleet_from_arrays",
    "generate",
    "generate_case_study",
    "max_magnitude",
    "max_magnitude_vs_quantile",
    "order_statistic_index",
    "peak",
    "policy_step",
    "pulse",
    "quantile_curve",
    "read_fleet_csv",
    "read_profile_json",
    "run_bench",
    "sample_availability",
    "sample_max_magnitudes",
    "scale",
    "simulate_feasible",
    "simulation_oracle",
    "solution_from_magnitudes",
    "time_to_go",
    "total_energy",
    "total_power",
    "trapezoid",
    "write_fleet_csv",
    "write_profile_json",
]
