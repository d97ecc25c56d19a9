"""Random fleet generation from log-normal rating specifications.

Ratings are specified by the mean and standard deviation OF the log-normal
distribution itself (not of the underlying normal); the constructor does
the moment-matching conversion. The bundled 500-device study population
mixes a broad base of small chargers with a block of 50 kW rapid units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fleet import Fleet, fleet_from_arrays


@dataclass(frozen=True)
class LogNormalSpec:
    """Log-normal distribution pinned by its own first two moments."""

    mean: float
    std: float

    def __post_init__(self):
        if self.mean <= 0.0:
            raise ValueError(f"log-normal mean must be > 0, got {self.mean}")
        if self.std < 0.0:
            raise ValueError(f"log-normal std must be >= 0, got {self.std}")

    @property
    def underlying(self) -> tuple[float, float]:
        """(mu, sigma) of the underlying normal, by moment matching."""
        sigma_sq = np.log1p((self.std / self.mean) ** 2)
        mu = np.log(self.mean) - 0.5 * sigma_sq
        return float(mu), float(np.sqrt(sigma_sq))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        mu, sigma = self.underlying
        return rng.lognormal(mean=mu, sigma=sigma, size=size)


@dataclass(frozen=True)
class DeviceGroup:
    """A block of devices sharing rating distributions.

    power and energy are each either a LogNormalSpec or a fixed float
    (kW / kWh). Fixed values consume no random draws.
    """

    count: int
    power: LogNormalSpec | float
    energy: LogNormalSpec | float

    def __post_init__(self):
        if self.count < 0:
            raise ValueError(f"group count must be >= 0, got {self.count}")
        for name, spec in (("power", self.power), ("energy", self.energy)):
            if isinstance(spec, LogNormalSpec):
                continue
            if not isinstance(spec, (int, float)):
                raise ValueError(f"group {name} must be a LogNormalSpec or a number, got {spec!r}")
            if name == "power" and float(spec) <= 0.0:
                raise ValueError(f"group power must be > 0, got {spec}")
            if float(spec) < 0.0:
                raise ValueError(f"group {name} must be >= 0, got {spec}")


#: 500-device study population: 450 small chargers, log-normal ratings with
#: mean 3.3 kW / std 1 kW, and 50 rapid chargers fixed at 50 kW; energies
#: log-normal with mean 40 kWh / std 10 kWh for every device. Extreme draws
#: are kept as-is (no truncation or resampling).
CASE_STUDY_GROUPS = (
    DeviceGroup(450, LogNormalSpec(3.3, 1.0), LogNormalSpec(40.0, 10.0)),
    DeviceGroup(50, 50.0, LogNormalSpec(40.0, 10.0)),
)


def _draw(spec: LogNormalSpec | float, rng: np.random.Generator, size: int) -> np.ndarray:
    if isinstance(spec, LogNormalSpec):
        return spec.sample(rng, size)
    return np.full(size, float(spec))


def generate(groups, seed: int) -> Fleet:
    """Concatenate device groups in order, deterministically under seed."""
    rng = np.random.default_rng(seed)
    p_parts: list[np.ndarray] = []
    e_parts: list[np.ndarray] = []
    for group in groups:
        if not isinstance(group, DeviceGroup):
            group = DeviceGroup(*group)
        p_parts.append(_draw(group.power, rng, group.count))
        e_parts.append(_draw(group.energy, rng, group.count))
    if not p_parts:
        return Fleet(())
    return fleet_from_arrays(np.concatenate(p_parts), np.concatenate(e_parts))


def generate_case_study(seed: int) -> Fleet:
    """The 500-device study fleet for the given seed."""
    return generate(CASE_STUDY_GROUPS, seed)
