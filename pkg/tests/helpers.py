"""Shared random-instance generators and independent oracles for tests."""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad

from fleetcap import RequestProfile, peak


def random_profile(rng: np.random.Generator, max_power: float = 8.0, allow_jumps: bool = True) -> RequestProfile:
    """Random nonnegative piecewise-linear profile, sometimes with jumps."""
    k = int(rng.integers(1, 7))
    times = np.concatenate([[0.0], np.cumsum(rng.uniform(0.05, 1.5, k + 1))])
    powers = rng.uniform(0.0, max_power, k + 2)
    bps = list(zip(times.tolist(), powers.tolist()))
    if allow_jumps and rng.random() < 0.5:
        j = int(rng.integers(0, len(bps)))
        bps.insert(j + 1, (bps[j][0], float(rng.uniform(0.0, max_power))))
    return RequestProfile(bps)


def random_fleet_arrays(rng: np.random.Generator, n_max: int = 8, zero_frac: float = 0.15):
    """Random (p_max, x) arrays with a share of empty devices."""
    n = int(rng.integers(1, n_max + 1))
    p_max = rng.uniform(0.05, 5.0, n)
    x = rng.uniform(0.0, 10.0, n) * (rng.random(n) >= zero_frac)
    return p_max, x


def random_step_request(rng: np.random.Generator, power_scale: float):
    """Natively piecewise-constant request: (profile, [(dt, power), ...])."""
    k = int(rng.integers(1, 13))
    dts = rng.uniform(0.05, 0.6, k)
    pows = rng.uniform(0.0, 1.0, k) * power_scale
    bps = [(0.0, float(pows[0]))]
    t = 0.0
    for i in range(k):
        t += float(dts[i])
        bps.append((t, float(pows[i])))
        bps.append((t, float(pows[i + 1]) if i + 1 < k else 0.0))
    return RequestProfile(bps), list(zip(dts.tolist(), pows.tolist()))


def energy_above_by_quadrature(profile: RequestProfile, p: float) -> tuple[float, float]:
    """Adaptive quadrature of the energy above threshold p; (value, abserr).

    Integration points include the profile breakpoints and the times where
    the profile crosses level p, so the integrand's kinks are resolved.
    """
    pts = set(profile.times.tolist())
    for t1, p1, t2, p2 in profile.segments():
        if (p1 - p) * (p2 - p) < 0.0:
            pts.add(t1 + (p - p1) * (t2 - t1) / (p2 - p1))
    val, err = quad(
        lambda t: max(profile.value(t) - p, 0.0),
        0.0,
        float(profile.times[-1]),
        points=sorted(pts),
        limit=300,
    )
    return val, err


def random_p_values(rng: np.random.Generator, profile: RequestProfile, count: int) -> np.ndarray:
    """Thresholds spread over the profile's power range, a bit past the peak."""
    return rng.uniform(0.0, max(peak(profile), 1e-6) * 1.05, count)
