"""Energy-above-threshold curves for requests and fleets.

Both a request profile and a fleet reduce to the same object: a function
of a power threshold p giving the energy involved above that threshold.
For a request this is the energy it demands above p; for a fleet it is
the energy the devices can jointly deliver above p when drained greedily.
A request is deliverable exactly when its curve lies pointwise at or
below the fleet's curve, which turns feasibility checks into a finite
comparison on breakpoints.

Curves are stored exactly as piecewise polynomials of degree <= 2 (linear
time-segments integrate to quadratics), never as sampled grids. Every
curve is convex, non-increasing, reaches zero at its last breakpoint and
stays zero beyond it. These invariants are asserted at construction.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .profiles import RequestProfile

#: Absolute slack, kWh, granted when comparing a request curve against a
#: capacity curve. Maximum-magnitude solutions sit exactly on the boundary,
#: so a strict inequality would be numerically fragile.
DOMINANCE_SLACK_KWH = 1e-9


@dataclass(frozen=True, eq=False)
class EnergyCurve:
    """Piecewise polynomial, degree <= 2 per segment, in local coordinates.

    powers: breakpoints p_0 = 0 < p_1 < ... < p_K (kW). coeffs[k] holds
    (c0, c1, c2) so that on [p_k, p_{k+1}] the value is
    c0 + c1*s + c2*s**2 with s = p - p_k (kWh). The curve is zero for
    p >= p_K. A bare [0.0] with no segments is the zero curve.
    """

    powers: np.ndarray
    coeffs: np.ndarray

    def __init__(self, powers, coeffs):
        powers = np.ascontiguousarray(powers, dtype=float)
        coeffs = np.ascontiguousarray(coeffs, dtype=float).reshape(-1, 3)
        _validate(powers, coeffs)
        powers.setflags(write=False)
        coeffs.setflags(write=False)
        object.__setattr__(self, "powers", powers)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zero(cls) -> "EnergyCurve":
        return cls(np.zeros(1), np.empty((0, 3)))

    @classmethod
    def piecewise_linear(cls, powers, values) -> "EnergyCurve":
        """Curve through (powers[k], values[k]) with straight segments."""
        powers = np.asarray(powers, dtype=float)
        values = np.asarray(values, dtype=float)
        if powers.size != values.size:
            raise ValueError("powers and values must have the same length")
        if powers.size == 1:
            return cls(powers, np.empty((0, 3)))
        coeffs = np.zeros((powers.size - 1, 3))
        coeffs[:, 0] = values[:-1]
        coeffs[:, 1] = np.diff(values) / np.diff(powers)
        return cls(powers, coeffs)

    @property
    def is_linear(self) -> bool:
        return self.coeffs.shape[0] == 0 or bool(np.all(self.coeffs[:, 2] == 0.0))

    @property
    def node_values(self) -> np.ndarray:
        """Value at each breakpoint (the last is 0 by construction)."""
        return np.concatenate([self.coeffs[:, 0], [0.0]]) if self.coeffs.shape[0] else np.zeros(1)

    def evaluate(self, p) -> np.ndarray | float:
        """Exact value at threshold p >= 0 (scalar or array), kWh."""
        p = np.asarray(p, dtype=float)
        scalar = p.ndim == 0
        pq = np.atleast_1d(p)
        if np.any(pq < 0.0):
            raise ValueError("power threshold must be >= 0")
        out = evaluate_segments(self.powers, self.coeffs, pq)
        return float(out[0]) if scalar else out

    __call__ = evaluate

    def scaled(self, m: float) -> "EnergyCurve":
        """Curve of the magnitude-scaled request, without re-integration.

        Scaling a profile's powers by m > 0 stretches its curve to
        m * value(p / m); breakpoints scale by m, the linear coefficient is
        unchanged, the quadratic one divides by m.
        """
        if m <= 0.0:
            raise ValueError(f"scale factor must be > 0, got {m}")
        coeffs = self.coeffs.copy()
        coeffs[:, 0] *= m
        coeffs[:, 2] /= m
        return EnergyCurve(self.powers * m, coeffs)

    def dominated_by(self, capacity: "EnergyCurve", slack: float = DOMINANCE_SLACK_KWH) -> bool:
        """True iff self(p) <= capacity(p) + slack for all p >= 0.

        Exact via the merged breakpoint set: capacity curves are piecewise
        linear, so on each merged interval (self - capacity) is convex and
        attains its maximum at an endpoint. (Guarded elsewhere by a
        dense-grid property test.)
        """
        merged = np.union1d(self.powers, capacity.powers)
        return bool(np.all(self.evaluate(merged) <= capacity.evaluate(merged) + slack))

    def to_csv(self, file: io.TextIOBase | str) -> None:
        """Write `p_kw,e_kwh` rows: breakpoints, plus 9 interior samples on
        quadratic segments so plots of curved parts stay faithful."""
        ps = [self.powers[:1]] if self.coeffs.shape[0] == 0 else []
        for k in range(self.coeffs.shape[0]):
            ps.append(self.powers[k : k + 1])
            if self.coeffs[k, 2] != 0.0:
                ps.append(np.linspace(self.powers[k], self.powers[k + 1], 11)[1:-1])
        if self.coeffs.shape[0]:
            ps.append(self.powers[-1:])
        write_curve_csv(np.concatenate(ps), self.evaluate(np.concatenate(ps)), file)


def evaluate_segments(powers: np.ndarray, coeffs: np.ndarray, pq: np.ndarray) -> np.ndarray:
    """Raw piecewise evaluation on a nonnegative query array, 0 past the end."""
    out = np.zeros_like(pq)
    live = pq < powers[-1]
    if np.any(live):
        pi = pq[live]
        k = np.clip(np.searchsorted(powers, pi, side="right") - 1, 0, coeffs.shape[0] - 1)
        s = pi - powers[k]
        c = coeffs[k]
        out[live] = c[:, 0] + s * (c[:, 1] + s * c[:, 2])
    return out


def _validate(powers: np.ndarray, coeffs: np.ndarray) -> None:
    if powers.ndim != 1 or powers.size < 1:
        raise ValueError("curve needs at least one breakpoint power")
    if powers[0] != 0.0:
        raise ValueError("curve breakpoints must start at p = 0")
    if np.any(np.diff(powers) <= 0.0):
        raise ValueError("curve breakpoints must be strictly increasing")
    if coeffs.shape != (powers.size - 1, 3):
        raise ValueError("need exactly one coefficient triple per segment")
    if coeffs.shape[0] == 0:
        return
    widths = np.diff(powers)
    left_vals = coeffs[:, 0]
    right_vals = coeffs[:, 0] + coeffs[:, 1] * widths + coeffs[:, 2] * widths**2
    scale = max(abs(left_vals[0]), 1.0)
    vtol = 1e-9 * scale
    if np.any(coeffs[:, 2] < -1e-12 * scale):
        raise ValueError("curve must be convex: quadratic coefficients must be >= 0")
    if abs(right_vals[-1]) > vtol:
        raise ValueError(f"curve must reach 0 at its last breakpoint, got {right_vals[-1]}")
    if np.any(np.abs(right_vals[:-1] - left_vals[1:]) > vtol):
        raise ValueError("curve must be continuous across breakpoints")
    left_slope = coeffs[:, 1] + 2.0 * coeffs[:, 2] * widths  # slope at each segment's right end
    stol = 1e-9 * max(float(np.max(np.abs(coeffs[:, 1]))), 1.0)
    if np.any(left_slope > stol) or np.any(coeffs[:, 1] > stol):
        raise ValueError("curve must be non-increasing")
    if np.any(left_slope[:-1] > coeffs[1:, 1] + stol):
        raise ValueError("curve must be convex: slopes must be non-decreasing across breakpoints")


def demand_curve(profile: RequestProfile) -> EnergyCurve:
    """Energy the request demands above each power threshold, exactly.

    Each linear time-segment of the profile contributes, at threshold p:
    its area minus p times its width while both endpoints sit above p,
    a quadratic tail while p cuts through it, and nothing once p clears
    it. Summing per-segment closed forms over the profile's distinct
    breakpoint powers gives the exact piecewise-quadratic curve.
    """
    powers = np.unique(np.concatenate([[0.0], profile.powers]))
    n_seg = powers.size - 1
    coeffs = np.zeros((max(n_seg, 0), 3))
    for t1, p1, t2, p2 in profile.segments():
        dt = t2 - t1
        lo, hi = (p1, p2) if p1 <= p2 else (p2, p1)
        area = 0.5 * (p1 + p2) * dt
        ilo = int(np.searchsorted(powers, lo))
        ihi = int(np.searchsorted(powers, hi))
        # intervals entirely below the segment: linear part, area - p*dt
        coeffs[:ilo, 0] += area - powers[:ilo] * dt
        coeffs[:ilo, 1] -= dt
        if ihi > ilo:
            # intervals the segment's ramp passes through: quadratic tail
            q = dt / (2.0 * (hi - lo))
            h = hi - powers[ilo:ihi]
            coeffs[ilo:ihi, 0] += q * h * h
            coeffs[ilo:ihi, 1] -= 2.0 * q * h
            coeffs[ilo:ihi, 2] += q
    if n_seg == 0 or not np.any(coeffs):
        return EnergyCurve.zero()
    return EnergyCurve(powers, coeffs)


def capacity_curve(p_max, x) -> EnergyCurve:
    """Deliverable energy above each threshold for a fleet in state x.

    Drained greedily at full power, the fleet sustains the sum of all
    p_max while every device still holds energy, then steps down as the
    shortest-lived devices empty. Sorting by remaining time descending and
    accumulating powers yields a piecewise-linear curve whose slope on the
    k-th power band is minus the k-th largest remaining time. Devices with
    zero remaining time add no energy anywhere (they only extend the zero
    tail, which the representation leaves implicit).
    """
    p_max = np.asarray(p_max, dtype=float)
    x = np.asarray(x, dtype=float)
    if p_max.shape != x.shape or p_max.ndim != 1:
        raise ValueError(f"p_max and x must be 1-D of equal length, got {p_max.shape} and {x.shape}")
    if p_max.size and np.any(p_max <= 0.0):
        raise ValueError("p_max entries must be > 0")
    if np.any(x < 0.0):
        raise ValueError("state entries must be >= 0")
    live = x > 0.0
    if not np.any(live):
        return EnergyCurve.zero()
    levels, inverse = np.unique(-x[live], return_inverse=True)
    levels = -levels  # distinct remaining times, descending; ties merged
    band_power = np.bincount(inverse, weights=p_max[live])
    powers = np.concatenate([[0.0], np.cumsum(band_power)])
    # accumulate values from the zero tail backwards so the end is exactly 0
    values = np.concatenate([np.cumsum((levels * band_power)[::-1])[::-1], [0.0]])
    coeffs = np.zeros((levels.size, 3))
    coeffs[:, 0] = values[:-1]
    coeffs[:, 1] = -levels
    return EnergyCurve(powers, coeffs)


def dominated_by(request: EnergyCurve, capacity: EnergyCurve, slack: float = DOMINANCE_SLACK_KWH) -> bool:
    """Feasibility test: request curve at or below capacity everywhere."""
    return request.dominated_by(capacity, slack=slack)


def write_curve_csv(p: np.ndarray, values: np.ndarray, file: io.TextIOBase | str) -> None:
    """Write `p_kw,e_kwh` rows for plot-ready consumption."""
    if isinstance(file, str):
        with open(file, "w", encoding="utf-8", newline="") as f:
            write_curve_csv(p, values, f)
        return
    file.write("p_kw,e_kwh\n")
    for pi, vi in zip(np.asarray(p).tolist(), np.asarray(values).tolist()):
        file.write(f"{pi!r},{vi!r}\n")
