"""Availability-risk sizing: Monte Carlo solver, quantile approximation, CIs.

Device availability is modelled as independent per-device Bernoulli draws.
Each draw masks the fleet state, yielding a sampled capacity curve and a
per-sample maximum magnitude; the chance-constrained answer at risk level
c is the largest magnitude still feasible in at least a (1 - c) share of
the samples, read off as an order statistic.

Reproducibility contract: the result for sample index i depends only on
(master seed, i). Workers therefore change wall-clock time but never the
output; identical seeds give bit-identical results at any worker count.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .curves import DOMINANCE_SLACK_KWH, EnergyCurve, capacity_curve, demand_curve, write_curve_csv
from .fleet import Fleet, time_to_go, total_power
from .magnitude import DEFAULT_REL_TOL, dominance_oracle_from_curve, max_magnitude
from .profiles import RequestProfile, peak

_SAMPLE_STREAM = 0
_BOOTSTRAP_STREAM = 1

DEFAULT_BOOTSTRAP_RESAMPLES = 1000
DEFAULT_GRID_CAP = 2000


@dataclass(frozen=True, eq=False)
class AvailabilityModel:
    """Independent Bernoulli availability, one probability per device."""

    probs: np.ndarray

    def __init__(self, probs):
        probs = np.ascontiguousarray(probs, dtype=float)
        if probs.ndim != 1:
            raise ValueError("availability probabilities must be 1-D")
        if np.any((probs < 0.0) | (probs > 1.0)):
            raise ValueError("availability probabilities must lie in [0, 1]")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, q: float, n: int) -> "AvailabilityModel":
        return cls(np.full(n, float(q)))


def _stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for (seed, key); the reproducibility anchor."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def sample_availability(model: AvailabilityModel, rng: np.random.Generator) -> np.ndarray:
    """One 0/1 availability draw per device."""
    return (rng.random(model.probs.size) < model.probs).astype(np.int8)


def draw_availability_ensemble(model: AvailabilityModel, n_samples: int, seed: int) -> np.ndarray:
    """(n_samples, n_devices) 0/1 matrix; row i uses stream (seed, i)."""
    if n_samples < 1:
        raise ValueError(f"need at least one sample, got {n_samples}")
    out = np.empty((n_samples, model.probs.size), dtype=np.int8)
    for i in range(n_samples):
        out[i] = sample_availability(model, _stream(seed, _SAMPLE_STREAM, i))
    return out


def order_statistic_index(n_samples: int, c: float) -> int:
    """0-based index into the ascending per-sample magnitudes.

    Picks the largest magnitude feasible in at least ceil((1-c)*n) samples;
    the ceiling errs on the conservative side. A small relative guard keeps
    float noise in (1-c)*n from flipping exact integers.
    """
    if not 0.0 < c < 1.0:
        raise ValueError(f"risk level c must lie in (0, 1), got {c}")
    v = (1.0 - c) * n_samples
    r = math.ceil(v - 1e-9 * max(1.0, abs(v)))
    r = min(max(r, 1), n_samples)
    return n_samples - r


@dataclass(frozen=True, eq=False)
class CcSolution:
    """Chance-constrained magnitude with its sample ensemble and 95% CI."""

    magnitude: float
    c: float
    n_samples: int
    sample_magnitudes: np.ndarray
    order_index: int
    ci95: tuple[float, float]

    def __post_init__(self):
        ms = np.ascontiguousarray(self.sample_magnitudes, dtype=float)
        ms.setflags(write=False)
        object.__setattr__(self, "sample_magnitudes", ms)
        if not 0.0 < self.c < 1.0:
            raise ValueError(f"risk level c must lie in (0, 1), got {self.c}")
        if ms.size != self.n_samples:
            raise ValueError("sample_magnitudes length must equal n_samples")
        if np.any(np.diff(ms) < 0.0):
            raise ValueError("sample_magnitudes must be sorted ascending")
        if not 0 <= self.order_index < self.n_samples:
            raise ValueError("order_index out of range")
        if self.magnitude != ms[self.order_index]:
            raise ValueError("magnitude must equal sample_magnitudes[order_index]")
        if self.ci95[0] > self.ci95[1]:
            raise ValueError("ci95 bounds out of order")

    def to_json_dict(self) -> dict:
        return {
            "magnitude_kw": self.magnitude,
            "c": self.c,
            "n_samples": self.n_samples,
            "ci95_kw": [self.ci95[0], self.ci95[1]],
            "order_index": self.order_index,
        }


def _magnitudes_chunk(args) -> np.ndarray:
    """Per-sample maximum magnitudes for sample indices [start, stop).

    Module-level so process pools can pickle it; results depend only on
    the arguments, never on scheduling.
    """
    p_max, x_full, probs, masks, shape, seed, start, stop, upper, tol = args
    base = demand_curve(shape)
    out = np.empty(stop - start)
    for i in range(start, stop):
        if masks is None:
            rng = _stream(seed, _SAMPLE_STREAM, i)
            a = rng.random(probs.size) < probs
        else:
            a = masks[i - start] != 0
        cap = capacity_curve(p_max, np.where(a, x_full, 0.0))
        out[i - start] = max_magnitude(dominance_oracle_from_curve(base, cap), upper, tol)
    return out


def sample_max_magnitudes(
    fleet: Fleet,
    model: AvailabilityModel,
    shape: RequestProfile,
    n_samples: int,
    seed: int,
    *,
    ensemble: np.ndarray | None = None,
    tol: float | None = None,
    workers: int = 1,
) -> np.ndarray:
    """Maximum feasible magnitude per availability sample, in sample order.

    Pass `ensemble` (a pre-drawn 0/1 matrix) to pin the exact samples for
    paired comparisons; otherwise sample i is drawn from stream (seed, i).
    Every sample's bisection shares the same bracket [0, total fleet power]
    and tolerance, so magnitudes from different runs land on one common
    probe grid.
    """
    if len(fleet) == 0:
        raise ValueError("cannot size a service for an empty fleet")
    if n_samples < 1:
        raise ValueError(f"need at least one sample, got {n_samples}")
    if model.probs.size != len(fleet):
        raise ValueError(f"model covers {model.probs.size} devices, fleet has {len(fleet)}")
    if ensemble is not None:
        ensemble = np.asarray(ensemble)
        if ensemble.shape != (n_samples, len(fleet)):
            raise ValueError(f"ensemble shape {ensemble.shape} != ({n_samples}, {len(fleet)})")
    upper = total_power(fleet)
    if tol is None:
        tol = DEFAULT_REL_TOL * upper
    p_max = fleet.p_max
    x_full = time_to_go(fleet)
    bounds = np.linspace(0, n_samples, num=max(1, min(workers, n_samples)) + 1, dtype=int)
    jobs = [
        (p_max, x_full, model.probs, None if ensemble is None else ensemble[lo:hi], shape, seed, int(lo), int(hi), upper, tol)
        for lo, hi in zip(bounds[:-1], bounds[1:])
        if hi > lo
    ]
    if len(jobs) == 1:
        return _magnitudes_chunk(jobs[0])
    with ProcessPoolExecutor(max_workers=len(jobs)) as pool:
        parts = list(pool.map(_magnitudes_chunk, jobs))
    return np.concatenate(parts)


def bootstrap_ci(
    sample_magnitudes,
    c: float,
    resamples: int = DEFAULT_BOOTSTRAP_RESAMPLES,
    level: float = 0.95,
    seed: int = 0,
) -> tuple[float, float]:
    """Percentile bootstrap CI for the order-statistic magnitude.

    Resamples the magnitudes with replacement, recomputes the same order
    statistic each time, and returns the (1-level)/2 and 1-(1-level)/2
    percentiles of the resampled statistics.
    """
    if resamples < 100:
        raise ValueError(f"need at least 100 bootstrap resamples, got {resamples}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"confidence level must lie in (0, 1), got {level}")
    ms = np.sort(np.asarray(sample_magnitudes, dtype=float))
    n = ms.size
    k = order_statistic_index(n, c)
    rng = _stream(seed, _BOOTSTRAP_STREAM, 0)
    stats = np.empty(resamples)
    chunk = max(1, int(2_000_000 // max(n, 1)))
    done = 0
    while done < resamples:
        b = min(chunk, resamples - done)
        idx = rng.integers(0, n, size=(b, n))
        stats[done : done + b] = np.partition(ms[idx], k, axis=1)[:, k]
        done += b
    alpha = 0.5 * (1.0 - level)
    lo, hi = np.quantile(stats, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


def solution_from_magnitudes(
    magnitudes,
    c: float,
    *,
    seed: int = 0,
    bootstrap_resamples: int = DEFAULT_BOOTSTRAP_RESAMPLES,
) -> CcSolution:
    """Order-statistic solution and CI from precomputed per-sample maxima."""
    ms = np.sort(np.asarray(magnitudes, dtype=float))
    n = ms.size
    if n < 1:
        raise ValueError("need at least one sample magnitude")
    if c * n < 1.0:
        warnings.warn(
            f"c*N = {c * n:.3g} < 1: the order statistic degenerates to the sample minimum",
            stacklevel=2,
        )
    k = order_statistic_index(n, c)
    ci = bootstrap_ci(ms, c, resamples=bootstrap_resamples, seed=seed)
    return CcSolution(
        magnitude=float(ms[k]),
        c=c,
        n_samples=n,
        sample_magnitudes=ms,
        order_index=k,
        ci95=ci,
    )


def cc_solve(
    fleet: Fleet,
    model: AvailabilityModel,
    shape: RequestProfile,
    c: float,
    n_samples: int,
    seed: int,
    *,
    ensemble: np.ndarray | None = None,
    tol: float | None = None,
    workers: int = 1,
    bootstrap_resamples: int = DEFAULT_BOOTSTRAP_RESAMPLES,
) -> CcSolution:
    """Chance-constrained maximum magnitude of the shaped service.

    Draws n_samples availability vectors (or uses `ensemble`), solves each
    sample's maximum magnitude against its sampled capacity curve, and
    returns the order statistic at risk level c with a bootstrap CI.
    """
    if not 0.0 < c < 1.0:
        raise ValueError(f"risk level c must lie in (0, 1), got {c}")
    mags = sample_max_magnitudes(
        fleet, model, shape, n_samples, seed, ensemble=ensemble, tol=tol, workers=workers
    )
    return solution_from_magnitudes(mags, c, seed=seed, bootstrap_resamples=bootstrap_resamples)


@dataclass(frozen=True, eq=False)
class QuantileCurve:
    """Single deterministic stand-in capacity from pointwise sample quantiles.

    Piecewise linear through (grid, values); zero beyond the grid. Unlike
    sampled capacity curves it need not be convex, only non-increasing.
    """

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.ascontiguousarray(self.grid, dtype=float)
        values = np.ascontiguousarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.size < 1 or grid.shape != values.shape:
            raise ValueError("grid and values must be 1-D of equal, nonzero length")
        if grid[0] != 0.0 or np.any(np.diff(grid) <= 0.0):
            raise ValueError("grid must start at 0 and increase strictly")
        if np.any(values < 0.0):
            raise ValueError("quantile values must be >= 0")
        if np.any(np.diff(values) > 1e-9 * max(float(values[0]), 1.0)):
            raise ValueError("quantile values must be non-increasing")
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def evaluate(self, p) -> np.ndarray | float:
        p = np.asarray(p, dtype=float)
        if np.any(np.atleast_1d(p) < 0.0):
            raise ValueError("power threshold must be >= 0")
        out = np.interp(p, self.grid, self.values, right=0.0)
        return float(out) if p.ndim == 0 else out

    __call__ = evaluate

    def to_csv(self, file) -> None:
        write_curve_csv(self.grid, self.values, file)


def _linear_node_values(curve: EnergyCurve) -> np.ndarray:
    # capacity curves are piecewise linear: node values are the segment
    # intercepts plus the 0 at the last breakpoint
    return np.concatenate([curve.coeffs[:, 0], [0.0]])


def quantile_curve(
    fleet: Fleet,
    model: AvailabilityModel,
    c: float,
    n_samples: int,
    seed: int,
    *,
    ensemble: np.ndarray | None = None,
    grid_cap: int = DEFAULT_GRID_CAP,
) -> QuantileCurve:
    """Pointwise lower c-quantile of sampled capacity curves.

    At each grid power the value is the largest Q with at least
    ceil((1-c)*N) sample curves at or above Q. The grid is the union of
    all sample breakpoints, uniformly thinned to at most grid_cap points.
    """
    if not 0.0 < c < 1.0:
        raise ValueError(f"risk level c must lie in (0, 1), got {c}")
    if grid_cap < 2:
        raise ValueError(f"grid cap must be >= 2, got {grid_cap}")
    if model.probs.size != len(fleet):
        raise ValueError(f"model covers {model.probs.size} devices, fleet has {len(fleet)}")
    if ensemble is None:
        ensemble = draw_availability_ensemble(model, n_samples, seed)
    else:
        ensemble = np.asarray(ensemble)
        if ensemble.shape != (n_samples, len(fleet)):
            raise ValueError(f"ensemble shape {ensemble.shape} != ({n_samples}, {len(fleet)})")
    p_max = fleet.p_max
    x_full = time_to_go(fleet)
    curves = [capacity_curve(p_max, np.where(row != 0, x_full, 0.0)) for row in ensemble]
    grid = np.unique(np.concatenate([cv.powers for cv in curves]))
    if grid.size > grid_cap:
        keep = np.unique(np.round(np.linspace(0, grid.size - 1, grid_cap)).astype(int))
        grid = grid[keep]
    vals = np.empty((n_samples, grid.size))
    for i, cv in enumerate(curves):
        vals[i] = np.interp(grid, cv.powers, _linear_node_values(cv), right=0.0)
    k = order_statistic_index(n_samples, c)
    qvals = np.partition(vals, k, axis=0)[k]
    return QuantileCurve(grid, qvals)


def max_magnitude_vs_quantile(
    curve: QuantileCurve,
    shape: RequestProfile,
    *,
    tol: float | None = None,
    upper: float | None = None,
) -> float:
    """Largest magnitude whose request curve fits under the quantile curve.

    The quantile curve may be non-convex, so dominance is checked on its
    grid plus 10 interior points per grid interval, plus the scaled
    request's own breakpoints. Pass the same (upper, tol) as the sampled
    solver to keep both searches on one probe grid.
    """
    unit = demand_curve(shape)
    shape_peak = peak(shape)
    if upper is None:
        upper = float(curve.grid[-1] / shape_peak) if shape_peak > 0.0 else float(curve.grid[-1])
    if curve.grid.size > 1:
        interior = np.linspace(curve.grid[:-1], curve.grid[1:], 12, axis=1)[:, 1:-1].ravel()
        check_p = np.union1d(curve.grid, interior)
    else:
        check_p = curve.grid
    q_fixed = curve.evaluate(check_p)

    def feasible(m: float) -> bool:
        if m == 0.0:
            return True
        scaled = unit.scaled(m)
        if not np.all(scaled.evaluate(check_p) <= q_fixed + DOMINANCE_SLACK_KWH):
            return False
        extra = scaled.powers
        return bool(np.all(scaled.evaluate(extra) <= curve.evaluate(extra) + DOMINANCE_SLACK_KWH))

    return max_magnitude(feasible, upper, tol)
