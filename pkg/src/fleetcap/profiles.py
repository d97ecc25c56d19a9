"""Nonnegative piecewise-linear power request profiles.

A profile is a power-vs-time signal given by breakpoints (t, P): linear
interpolation between consecutive breakpoints, identically zero before the
first and after the last. Duplicate time stamps encode jump
discontinuities; the right-hand value takes effect at the shared instant.
Times are hours, powers kW. Requests model supply shortfalls only, so all
powers are nonnegative, and every constructed profile starts at t = 0
(receipt of the request).
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

PROFILE_JSON_UNITS = {"time": "h", "power": "kW"}


@dataclass(frozen=True, eq=False)
class RequestProfile:
    times: np.ndarray
    powers: np.ndarray

    def __init__(self, breakpoints):
        pts = [(float(t), float(p)) for t, p in breakpoints]
        if not pts:
            raise ValueError("profile needs at least one breakpoint")
        times = np.array([t for t, _ in pts])
        powers = np.array([p for _, p in pts])
        if not np.all(np.isfinite(times)) or not np.all(np.isfinite(powers)):
            raise ValueError("profile breakpoints must be finite")
        if np.any(np.diff(times) < 0.0):
            raise ValueError("profile times must be non-decreasing")
        if times[0] < 0.0:
            raise ValueError("profile times must be >= 0")
        if np.any(powers < 0.0):
            raise ValueError("profile powers must be >= 0 (discharge requests only)")
        times.setflags(write=False)
        powers.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "powers", powers)

    @property
    def breakpoints(self) -> list[tuple[float, float]]:
        return list(zip(self.times.tolist(), self.powers.tolist()))

    def value(self, t) -> np.ndarray | float:
        """Power at time t (scalar or array); right-continuous at jumps."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tq = np.atleast_1d(t)
        out = np.zeros_like(tq)
        inside = (tq >= self.times[0]) & (tq <= self.times[-1])
        if np.any(inside):
            ti = tq[inside]
            # index of the last breakpoint with time <= ti: right value at jumps
            idx = np.searchsorted(self.times, ti, side="right") - 1
            idx = np.clip(idx, 0, len(self.times) - 1)
            vals = self.powers[idx].astype(float)
            seg = idx < len(self.times) - 1
            if np.any(seg):
                i = idx[seg]
                dt = self.times[i + 1] - self.times[i]
                frac = np.where(dt > 0.0, (ti[seg] - self.times[i]) / np.where(dt > 0.0, dt, 1.0), 0.0)
                vals[seg] = self.powers[i] + frac * (self.powers[i + 1] - self.powers[i])
            out[inside] = vals
        return float(out[0]) if scalar else out

    def segments(self):
        """Yield (t1, p1, t2, p2) for every breakpoint pair with t2 > t1."""
        for i in range(len(self.times) - 1):
            if self.times[i + 1] > self.times[i]:
                yield self.times[i], self.powers[i], self.times[i + 1], self.powers[i + 1]

    def integral_upto(self, t) -> np.ndarray | float:
        """Exact energy delivered on [0, t], kWh (scalar or array)."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tq = np.atleast_1d(t)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (self.powers[1:] + self.powers[:-1]) * np.diff(self.times))])
        idx = np.clip(np.searchsorted(self.times, tq, side="right") - 1, 0, len(self.times) - 1)
        out = cum[idx].copy()
        seg = (idx < len(self.times) - 1) & (tq > self.times[idx])
        if np.any(seg):
            i = idx[seg]
            dt = self.times[i + 1] - self.times[i]
            s = np.minimum(tq[seg] - self.times[i], dt)
            p1 = self.powers[i]
            slope = (self.powers[i + 1] - p1) / dt
            out[seg] += p1 * s + 0.5 * slope * s * s
        out[tq < self.times[0]] = 0.0
        return float(out[0]) if scalar else out


def pulse(duration: float, magnitude: float) -> RequestProfile:
    """Constant power `magnitude` on [0, duration), zero elsewhere."""
    if duration <= 0.0:
        raise ValueError(f"pulse duration must be > 0, got {duration}")
    if magnitude < 0.0:
        raise ValueError(f"pulse magnitude must be >= 0, got {magnitude}")
    return RequestProfile([(0.0, magnitude), (duration, magnitude), (duration, 0.0)])


def trapezoid(total_duration: float, magnitude: float) -> RequestProfile:
    """Ramp up, hold, ramp down, each for a third of the total duration."""
    if total_duration <= 0.0:
        raise ValueError(f"trapezoid duration must be > 0, got {total_duration}")
    if magnitude < 0.0:
        raise ValueError(f"trapezoid magnitude must be >= 0, got {magnitude}")
    third = total_duration / 3.0
    return RequestProfile([(0.0, 0.0), (third, magnitude), (2.0 * third, magnitude), (total_duration, 0.0)])


def scale(profile: RequestProfile, m: float) -> RequestProfile:
    """Multiply every breakpoint power by m >= 0; times unchanged."""
    if m < 0.0:
        raise ValueError(f"scale factor must be >= 0, got {m}")
    return RequestProfile(zip(profile.times, profile.powers * m))


def peak(profile: RequestProfile) -> float:
    """Largest breakpoint power, kW."""
    return float(np.max(profile.powers))


def energy(profile: RequestProfile) -> float:
    """Exact area under the profile, kWh."""
    return float(profile.integral_upto(float(profile.times[-1])))


def discretize(profile: RequestProfile, period: float) -> list[tuple[float, float]]:
    """Average the profile over consecutive intervals of width `period`.

    Partitions [0, t_last] (the last interval may be shorter) and assigns
    each interval its mean power, so the delivered energy is preserved
    exactly. Returns (width_h, power_kw) pairs.
    """
    if period <= 0.0:
        raise ValueError(f"discretization period must be > 0, got {period}")
    t_last = float(profile.times[-1])
    if t_last <= 0.0:
        return []
    ratio = t_last / period
    n_full = int(np.floor(ratio + 1e-9))
    remainder = t_last - n_full * period
    edges = [i * period for i in range(n_full + 1)]
    if remainder > 1e-9 * max(period, t_last):
        edges.append(t_last)
    else:
        edges[-1] = t_last
    if len(edges) < 2:
        edges = [0.0, t_last]
    edges_arr = np.asarray(edges)
    cum = profile.integral_upto(edges_arr)
    widths = np.diff(edges_arr)
    powers = np.diff(cum) / widths
    return list(zip(widths.tolist(), powers.tolist()))


def write_profile_json(profile: RequestProfile, file: io.TextIOBase | str) -> None:
    if isinstance(file, str):
        with open(file, "w", encoding="utf-8") as f:
            write_profile_json(profile, f)
        return
    json.dump({"units": PROFILE_JSON_UNITS, "breakpoints": profile.breakpoints}, file, indent=2)
    file.write("\n")


def read_profile_json(file: io.TextIOBase | str) -> RequestProfile:
    """Parse a profile JSON document; errors name the offending field."""
    if isinstance(file, str):
        with open(file, "r", encoding="utf-8") as f:
            return read_profile_json(f)
    try:
        doc = json.load(file)
    except json.JSONDecodeError as exc:
        raise ValueError(f"profile JSON: invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or "breakpoints" not in doc:
        raise ValueError("profile JSON: field breakpoints: missing")
    units = doc.get("units")
    if units != PROFILE_JSON_UNITS:
        raise ValueError(f"profile JSON: field units: expected {PROFILE_JSON_UNITS}, got {units}")
    bps = doc["breakpoints"]
    if not isinstance(bps, list) or not all(isinstance(b, list) and len(b) == 2 for b in bps):
        raise ValueError("profile JSON: field breakpoints: expected a list of [t, P] pairs")
    try:
        return RequestProfile([(float(t), float(p)) for t, p in bps])
    except (TypeError, ValueError) as exc:
        raise ValueError(f"profile JSON: field breakpoints: {exc}") from None
