"""Discrete-time dispatch policy and time-stepped feasibility check.

The policy drains devices with the most remaining discharge time first,
pulling them down toward a common level theta each step, subject to the
per-device power cap (no device can shed more than `dt` of remaining time
in a step of width dt). This is the baseline a curve-dominance check is
benchmarked against: simulating a request step by step and failing at the
first step whose energy cannot be sourced.

Every function here is pure in its inputs; simulations for different
availability samples can run in parallel freely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Absolute per-step energy slack, kWh, mirroring the curve-dominance slack
#: so boundary-tight requests classify identically under both checks.
STEP_SLACK_KWH = 1e-9

#: Simulation period, hours, for piecewise-constant tracking of a profile.
DEFAULT_PERIOD_H = 1.0 / 60.0


@dataclass(frozen=True)
class DispatchStep:
    """Per-device powers for one step, and the post-step common level.

    theta is None when the step saturates every device (each sheds its
    per-step maximum), in which case no common level exists.
    """

    u: np.ndarray
    theta: float | None


def _solve_theta(p_max: np.ndarray, x: np.ndarray, e_req: float, dt: float) -> float | None:
    """Smallest theta >= 0 with sum_i p_i * min(dt, max(x_i - theta, 0)) <= e_req.

    The left side is piecewise linear and non-increasing in theta, with
    kinks only at x_i and max(x_i - dt, 0); evaluating it on that grid and
    interpolating in the bracketing interval is exact. Returns None when
    even theta = 0 cannot source e_req (deliverable maximum too small).
    """
    kinks = np.unique(np.concatenate([[0.0], np.maximum(x - dt, 0.0), x]))
    shed = np.minimum(dt, np.clip(x[:, None] - kinks[None, :], 0.0, None))
    g = p_max @ shed
    if g[0] + STEP_SLACK_KWH < e_req:
        return None
    hit = np.flatnonzero(g <= e_req)
    j = int(hit[0])
    if j == 0:
        return 0.0
    return float(kinks[j - 1] + (g[j - 1] - e_req) * (kinks[j] - kinks[j - 1]) / (g[j - 1] - g[j]))


def policy_step(p_max, x, request_power: float, dt: float) -> tuple[DispatchStep, np.ndarray] | None:
    """Dispatch one step of `request_power` over width `dt`; None if infeasible.

    Feasible iff request_power * dt <= sum_i p_max_i * min(dt, x_i). The
    returned powers satisfy 0 <= u_i <= p_max_i and sum to the request; the
    new state is x_i minus the shed remaining time, never negative.
    """
    p_max = np.asarray(p_max, dtype=float)
    x = np.asarray(x, dtype=float)
    if p_max.shape != x.shape:
        raise ValueError(f"length mismatch: p_max {p_max.shape}, state {x.shape}")
    if request_power < 0.0:
        raise ValueError(f"request power must be >= 0, got {request_power}")
    if dt <= 0.0:
        raise ValueError(f"step width must be > 0, got {dt}")
    e_req = request_power * dt
    theta = _solve_theta(p_max, x, e_req, dt)
    if theta is None:
        return None
    shed = np.minimum(dt, np.clip(x - theta, 0.0, None))
    u = p_max * shed / dt
    new_x = x - shed
    return DispatchStep(u, None if theta == 0.0 else theta), new_x


def _simulate_sorted_py(p: np.ndarray, x: np.ndarray, dts: np.ndarray, pows: np.ndarray, slack: float) -> bool:
    # p and x sorted by x descending; x is scratch and is mutated in place.
    # Per step, walk theta downward from the largest remaining time through
    # the kink events (device enters the partial band at x_i, saturates at
    # x_i - dt), accumulating deliverable energy until it covers the step.
    n = x.shape[0]
    for k in range(dts.shape[0]):
        dt = dts[k]
        e_req = pows[k] * dt
        if e_req <= 0.0:
            continue
        if n == 0:
            return False
        theta = x[0]
        g = 0.0
        band = 0.0
        ia = 0
        ib = 0
        while ia < n and x[ia] >= theta:
            band += p[ia]
            ia += 1
        feasible = False
        theta_star = 0.0
        while True:
            next_a = x[ia] if ia < n else -1.0
            next_b = (x[ib] - dt) if ib < n else -1.0
            t_next = next_a if next_a > next_b else next_b
            if t_next < 0.0:
                t_next = 0.0
            g_next = g + band * (theta - t_next)
            if g_next >= e_req and band > 0.0:
                theta_star = theta - (e_req - g) / band
                feasible = True
                break
            g = g_next
            theta = t_next
            if theta <= 0.0:
                feasible = g + slack >= e_req
                break
            while ia < n and x[ia] >= theta:
                band += p[ia]
                ia += 1
            while ib < n and x[ib] - dt >= theta:
                band -= p[ib]
                ib += 1
        if not feasible:
            return False
        for i in range(n):
            if x[i] <= theta_star:
                break
            gap = x[i] - theta_star
            x[i] -= dt if gap > dt else gap
    return True


try:  # pragma: no cover - exercised indirectly
    from numba import njit

    _simulate_sorted = njit(cache=True)(_simulate_sorted_py)
except ImportError:  # pragma: no cover
    _simulate_sorted = _simulate_sorted_py


def sort_for_simulation(p_max, x) -> tuple[np.ndarray, np.ndarray]:
    """Reorder (p_max, x) by remaining time descending, the layout the
    simulation kernel requires; the policy preserves this order."""
    p_max = np.ascontiguousarray(p_max, dtype=float)
    x = np.ascontiguousarray(x, dtype=float)
    order = np.argsort(-x, kind="stable")
    return np.ascontiguousarray(p_max[order]), np.ascontiguousarray(x[order])


def simulate_sorted(p_sorted: np.ndarray, x_sorted: np.ndarray, dts: np.ndarray, pows: np.ndarray) -> bool:
    """Feasibility of presorted inputs; leaves arguments untouched."""
    return bool(_simulate_sorted(p_sorted, x_sorted.copy(), dts, pows, STEP_SLACK_KWH))


def simulate_feasible(p_max, x0, steps) -> bool:
    """Track (width_h, power_kw) steps with the dispatch policy.

    Returns False at the first step whose energy the fleet cannot source
    (early termination), True when every step succeeds. An empty step list
    is trivially feasible.
    """
    if not len(steps):
        return True
    dts = np.ascontiguousarray([dt for dt, _ in steps], dtype=float)
    pows = np.ascontiguousarray([pw for _, pw in steps], dtype=float)
    if np.any(dts <= 0.0):
        raise ValueError("step widths must be > 0")
    if np.any(pows < 0.0):
        raise ValueError("step powers must be >= 0")
    p_sorted, x_sorted = sort_for_simulation(p_max, x0)
    return simulate_sorted(p_sorted, x_sorted, dts, pows)
