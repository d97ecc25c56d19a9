"""Paired timing of the curve-dominance and policy-simulation oracles.

Both oracles size the same shaped service on the same sampled availability
states, so per-state costs compare like for like. The curve arm's timing
includes building the sampled capacity curve (the simulation arm never
needs it); state sampling and fleet generation are excluded from both.
The timing loop is single-threaded by design to isolate per-check cost.
"""

from __future__ import annotations

import platform
import time
from dataclasses import dataclass

import numpy as np

from . import dispatch
from .chance import AvailabilityModel, draw_availability_ensemble
from .curves import capacity_curve, demand_curve
from .fleet import Fleet, time_to_go, total_power
from .magnitude import (
    DEFAULT_REL_TOL,
    dominance_oracle_from_curve,
    max_magnitude,
    simulation_oracle_from_steps,
)
from .profiles import RequestProfile, discretize

WARMUP_ITERATIONS = 10


@dataclass(frozen=True)
class BenchReport:
    """Per-method mean/std time per sampled state and their ratio."""

    curve_mean_ms: float
    curve_std_ms: float
    policy_mean_ms: float
    policy_std_ms: float
    n_states: int
    speedup: float
    max_rel_magnitude_diff: float
    environment: str

    def to_json_dict(self) -> dict:
        return {
            "curve_oracle": {"mean_ms": self.curve_mean_ms, "std_ms": self.curve_std_ms},
            "policy_oracle": {"mean_ms": self.policy_mean_ms, "std_ms": self.policy_std_ms},
            "n_states": self.n_states,
            "speedup": self.speedup,
            "max_rel_magnitude_diff": self.max_rel_magnitude_diff,
            "environment": self.environment,
        }

    def table(self) -> str:
        rows = [
            ("Method", "Mean per state (ms)", "Std (ms)"),
            ("Policy simulation", f"{self.policy_mean_ms:.3f}", f"{self.policy_std_ms:.3f}"),
            ("Curve dominance", f"{self.curve_mean_ms:.3f}", f"{self.curve_std_ms:.3f}"),
        ]
        widths = [max(len(r[i]) for r in rows) for i in range(3)]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)) for row in rows]
        lines.insert(1, "-" * len(lines[0]))
        lines.append(f"speedup: {self.speedup:.2f}x over {self.n_states} states")
        return "\n".join(lines)


def run_bench(
    fleet: Fleet,
    model: AvailabilityModel,
    shape: RequestProfile,
    n_states: int,
    seed: int,
    period: float = dispatch.DEFAULT_PERIOD_H,
    *,
    tol: float | None = None,
    check_rel_tol: float = 1e-3,
) -> BenchReport:
    """Time both oracles' full magnitude searches over shared sampled states.

    Each state is one availability draw; per state, the timed region covers
    the complete bisection (capacity-curve formation included for the curve
    arm, early-terminating simulations for the policy arm). At least
    WARMUP_ITERATIONS untimed searches precede each method's measurements.
    Raises RuntimeError if the two arms' magnitudes disagree beyond
    check_rel_tol on any state.
    """
    if n_states < 1:
        raise ValueError(f"need at least one state, got {n_states}")
    upper = total_power(fleet)
    if tol is None:
        tol = DEFAULT_REL_TOL * upper
    p_max = fleet.p_max
    x_full = time_to_go(fleet)
    ensemble = draw_availability_ensemble(model, n_states, seed)
    states = [np.where(row != 0, x_full, 0.0) for row in ensemble]

    # shape-level work is shared across states and excluded from timing
    base = demand_curve(shape)
    steps = discretize(shape, period)
    dts = np.ascontiguousarray([w for w, _ in steps], dtype=float)
    unit_pows = np.ascontiguousarray([pw for _, pw in steps], dtype=float)

    def solve_curve(x):
        oracle = dominance_oracle_from_curve(base, capacity_curve(p_max, x))
        return max_magnitude(oracle, upper, tol)

    def solve_policy(x):
        p_sorted, x_sorted = dispatch.sort_for_simulation(p_max, x)
        oracle = simulation_oracle_from_steps(dts, unit_pows, p_sorted, x_sorted)
        return max_magnitude(oracle, upper, tol)

    n_warm = max(WARMUP_ITERATIONS, 1)
    for i in range(n_warm):
        solve_curve(states[i % n_states])
        solve_policy(states[i % n_states])

    curve_ms = np.empty(n_states)
    policy_ms = np.empty(n_states)
    curve_mags = np.empty(n_states)
    policy_mags = np.empty(n_states)
    for i, x in enumerate(states):
        t0 = time.perf_counter_ns()
        curve_mags[i] = solve_curve(x)
        curve_ms[i] = (time.perf_counter_ns() - t0) / 1e6
    for i, x in enumerate(states):
        t0 = time.perf_counter_ns()
        policy_mags[i] = solve_policy(x)
        policy_ms[i] = (time.perf_counter_ns() - t0) / 1e6
    scale = np.maximum(np.abs(curve_mags), 1e-12)
    max_rel_diff = float(np.max(np.abs(curve_mags - policy_mags) / scale))
    if max_rel_diff > check_rel_tol:
        worst = int(np.argmax(np.abs(curve_mags - policy_mags) / scale))
        raise RuntimeError(
            f"oracle disagreement on state {worst}: curve {curve_mags[worst]!r} kW "
            f"vs policy {policy_mags[worst]!r} kW (rel diff {max_rel_diff:.2e})"
        )
    try:
        import numba

        jit_note = f"numba {numba.__version__}"
    except ImportError:
        jit_note = "no numba (pure-python simulation kernel)"
    env = (
        f"python {platform.python_version()}, numpy {np.__version__}, {jit_note}, "
        f"{platform.machine()}/{platform.system()}, tol={tol!r} kW, period={period!r} h"
    )
    return BenchReport(
        curve_mean_ms=float(np.mean(curve_ms)),
        curve_std_ms=float(np.std(curve_ms)),
        policy_mean_ms=float(np.mean(policy_ms)),
        policy_std_ms=float(np.std(policy_ms)),
        n_states=n_states,
        speedup=float(np.mean(policy_ms) / np.mean(curve_ms)),
        max_rel_magnitude_diff=max_rel_diff,
        environment=env,
    )
