"""Storage devices, fleets, and the per-device remaining-discharge state.

Internal unit convention, fixed across the whole package: power in kW,
energy in kWh, time in hours. File interfaces restate units in their
headers so nothing is implicit on disk.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

FLEET_CSV_HEADER = ("id", "p_max_kw", "energy_kwh")


@dataclass(frozen=True)
class Device:
    """A single storage device, characterised by its discharge limits.

    p_max is the maximum discharge power in kW (measured at the grid side,
    so conversion losses are already folded in) and must be strictly
    positive: the remaining-discharge time divides by it. energy is the
    extractable energy in kWh and may be zero.
    """

    id: str
    p_max: float
    energy: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.p_max) or self.p_max <= 0.0:
            raise ValueError(f"device {self.id!r}: p_max must be finite and > 0, got {self.p_max}")
        if not np.isfinite(self.energy) or self.energy < 0.0:
            raise ValueError(f"device {self.id!r}: energy must be finite and >= 0, got {self.energy}")


@dataclass(frozen=True, eq=False)
class Fleet:
    """An ordered collection of devices with unique ids.

    Immutable after construction; instances can be shared freely across
    threads and processes.
    """

    devices: tuple[Device, ...]

    def __init__(self, devices: Iterable[Device]):
        object.__setattr__(self, "devices", tuple(devices))
        seen: set[str] = set()
        for d in self.devices:
            if d.id in seen:
                raise ValueError(f"duplicate device id {d.id!r}")
            seen.add(d.id)

    def __len__(self) -> int:
        return len(self.devices)

    @property
    def p_max(self) -> np.ndarray:
        """Per-device maximum discharge power, kW, in device order."""
        return np.array([d.p_max for d in self.devices], dtype=float)

    @property
    def energies(self) -> np.ndarray:
        """Per-device extractable energy, kWh, in device order."""
        return np.array([d.energy for d in self.devices], dtype=float)


def time_to_go(fleet: Fleet) -> np.ndarray:
    """Remaining discharge duration at full power, hours, one per device.

    Raises ValueError for an empty fleet: a capability computation on no
    devices is a caller bug, not a zero.
    """
    if len(fleet) == 0:
        raise ValueError("time_to_go of an empty fleet")
    return fleet.energies / fleet.p_max


def apply_availability(x: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Zero out the state of unavailable devices (elementwise product).

    `a` must contain only 0/1 entries and match `x` in length. Unavailable
    devices stay in the vector with zero remaining time, so lengths are
    stable across availability draws.
    """
    x = np.asarray(x, dtype=float)
    a = np.asarray(a)
    if x.shape != a.shape:
        raise ValueError(f"length mismatch: state has {x.shape}, availability has {a.shape}")
    if not np.all((a == 0) | (a == 1)):
        raise ValueError("availability entries must be 0 or 1")
    return x * a


def total_power(fleet: Fleet) -> float:
    """Sum of maximum discharge powers, kW. Zero for an empty fleet."""
    return float(np.sum(fleet.p_max)) if len(fleet) else 0.0


def total_energy(fleet: Fleet) -> float:
    """Sum of extractable energies, kWh. Zero for an empty fleet."""
    return float(np.sum(fleet.energies)) if len(fleet) else 0.0


def write_fleet_csv(fleet: Fleet, file: io.TextIOBase | str) -> None:
    """Write `id,p_max_kw,energy_kwh` rows, UTF-8, '.' decimal separator."""
    if isinstance(file, str):
        with open(file, "w", encoding="utf-8", newline="") as f:
            write_fleet_csv(fleet, f)
        return
    writer = csv.writer(file)
    writer.writerow(FLEET_CSV_HEADER)
    for d in fleet.devices:
        writer.writerow([d.id, repr(d.p_max), repr(d.energy)])


def read_fleet_csv(file: io.TextIOBase | str) -> Fleet:
    """Parse a fleet CSV; errors name the offending line and field."""
    if isinstance(file, str):
        with open(file, "r", encoding="utf-8", newline="") as f:
            return read_fleet_csv(f)
    reader = csv.reader(file)
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("fleet CSV: empty file, expected header id,p_max_kw,energy_kwh") from None
    if [h.strip() for h in header] != list(FLEET_CSV_HEADER):
        raise ValueError(f"fleet CSV line 1: expected header id,p_max_kw,energy_kwh, got {','.join(header)!r}")
    devices = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ValueError(f"fleet CSV line {lineno}: expected 3 fields, got {len(row)}")
        dev_id = row[0].strip()
        values = []
        for field, raw in zip(FLEET_CSV_HEADER[1:], row[1:]):
            try:
                values.append(float(raw))
            except ValueError:
                raise ValueError(f"fleet CSV line {lineno}: field {field}: could not parse {raw!r}") from None
        try:
            devices.append(Device(dev_id, values[0], values[1]))
        except ValueError as exc:
            raise ValueError(f"fleet CSV line {lineno}: {exc}") from None
    return Fleet(devices)


def fleet_from_arrays(p_max: Sequence[float], energy: Sequence[float], prefix: str = "dev") -> Fleet:
    """Build a fleet with generated ids from parallel power/energy arrays."""
    p_max = np.asarray(p_max, dtype=float)
    energy = np.asarray(energy, dtype=float)
    if p_max.shape != energy.shape:
        raise ValueError("p_max and energy must have the same length")
    width = max(4, len(str(max(p_max.size - 1, 0))))
    return Fleet(Device(f"{prefix}{i:0{width}d}", float(p), float(e)) for i, (p, e) in enumerate(zip(p_max, energy)))
