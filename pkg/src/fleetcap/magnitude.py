"""Maximum feasible service magnitude via bisection on a feasibility oracle.

An oracle is any monotone predicate magnitude -> feasible: if m is
feasible then so is every smaller magnitude. Curve dominance gives one
oracle (scale the request's energy curve, compare against a capacity
curve); time-stepped policy simulation gives the baseline oracle. Both
factories precompute everything independent of the probed magnitude, so
a probe costs one comparison or one simulation, nothing more.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from . import dispatch
from .curves import DOMINANCE_SLACK_KWH, EnergyCurve, demand_curve, evaluate_segments
from .profiles import RequestProfile, discretize

#: Default bisection tolerance as a fraction of the search upper bound;
#: far below 3-significant-figure reporting.
DEFAULT_REL_TOL = 1e-6

#: Hard cap on bisection iterations, guaranteeing termination even for
#: absurd tolerances.
MAX_BISECT_ITERS = 60

FeasibilityOracle = Callable[[float], bool]


def max_magnitude(oracle: FeasibilityOracle, upper: float, tol: float | None = None) -> float:
    """Largest magnitude the oracle accepts, to within tol.

    Brackets [0, upper], where upper is a known-infeasible-or-maximal bound
    (the fleet's total power for service sizing), halves the bracket until
    its width drops below tol, and returns the feasible lower end. If even
    `upper` is feasible it is returned outright. tol defaults to
    DEFAULT_REL_TOL * upper.

    Raises RuntimeError if the oracle rejects magnitude 0: a zero request
    is always deliverable, so that signals a broken oracle.
    """
    if upper < 0.0 or not np.isfinite(upper):
        raise ValueError(f"upper bound must be finite and >= 0, got {upper}")
    if tol is None:
        tol = DEFAULT_REL_TOL * upper
    if not oracle(0.0):
        raise RuntimeError("oracle rejects a zero-magnitude request; the oracle is broken")
    if upper == 0.0:
        return 0.0
    if tol <= 0.0:
        raise ValueError(f"tolerance must be > 0, got {tol}")
    if oracle(upper):
        return upper
    lo, hi = 0.0, upper
    for _ in range(min(MAX_BISECT_ITERS, math.ceil(math.log2(upper / tol)) + 1)):
        if hi - lo < tol:
            break
        mid = 0.5 * (lo + hi)
        if oracle(mid):
            lo = mid
        else:
            hi = mid
    return lo


def dominance_oracle_from_curve(base: EnergyCurve, capacity: EnergyCurve) -> FeasibilityOracle:
    """Oracle from a prebuilt unit-magnitude request curve.

    For piecewise-linear capacities (every fleet capacity is one) the probe
    applies the scaling identity value_m(p) = m * value_1(p / m) lazily on
    the merged breakpoints instead of materialising a scaled curve, which
    is what makes a probe a handful of array operations. The generic path
    and this one are interchangeable by construction.
    """
    if not capacity.is_linear:
        def feasible_generic(m: float) -> bool:
            if m < 0.0:
                raise ValueError(f"magnitude must be >= 0, got {m}")
            return m == 0.0 or base.scaled(m).dominated_by(capacity)

        return feasible_generic

    cap_p = capacity.powers
    cap_v = capacity.node_values
    base_p = base.powers
    base_c = base.coeffs
    base_v = base.node_values

    def feasible(m: float) -> bool:
        if m < 0.0:
            raise ValueError(f"magnitude must be >= 0, got {m}")
        if m == 0.0:
            return True
        # request curve at the capacity's breakpoints, via the identity
        req_at_cap = m * evaluate_segments(base_p, base_c, cap_p / m)
        if not np.all(req_at_cap <= cap_v + DOMINANCE_SLACK_KWH):
            return False
        # capacity at the scaled request's breakpoints
        cap_at_req = np.interp(m * base_p, cap_p, cap_v, right=0.0)
        return bool(np.all(m * base_v <= cap_at_req + DOMINANCE_SLACK_KWH))

    return feasible


def dominance_oracle(shape: RequestProfile, capacity: EnergyCurve) -> FeasibilityOracle:
    """Oracle checking the scaled request's curve against a capacity curve.

    The shape's curve is built once; each probe rescales it analytically
    and compares on merged breakpoints.
    """
    return dominance_oracle_from_curve(demand_curve(shape), capacity)


def simulation_oracle_from_steps(
    dts: np.ndarray,
    unit_pows: np.ndarray,
    p_sorted: np.ndarray,
    x_sorted: np.ndarray,
) -> FeasibilityOracle:
    """Oracle from prediscretized unit steps and a presorted fleet state."""

    def feasible(m: float) -> bool:
        if m < 0.0:
            raise ValueError(f"magnitude must be >= 0, got {m}")
        if m == 0.0 or dts.size == 0:
            return True
        return dispatch.simulate_sorted(p_sorted, x_sorted, dts, unit_pows * m)

    return feasible


def simulation_oracle(
    shape: RequestProfile,
    p_max,
    x,
    period: float = dispatch.DEFAULT_PERIOD_H,
) -> FeasibilityOracle:
    """Oracle running the dispatch policy on the discretized, scaled shape.

    Discretization commutes with scaling (interval averages are linear in
    the profile), so the unit shape is discretized once and only the step
    powers are rescaled per probe. Devices are presorted once; the
    simulation terminates at the first step it cannot meet.
    """
    steps = discretize(shape, period)
    dts = np.ascontiguousarray([dt for dt, _ in steps], dtype=float)
    unit_pows = np.ascontiguousarray([pw for _, pw in steps], dtype=float)
    p_sorted, x_sorted = dispatch.sort_for_simulation(p_max, x)
    return simulation_oracle_from_steps(dts, unit_pows, p_sorted, x_sorted)
