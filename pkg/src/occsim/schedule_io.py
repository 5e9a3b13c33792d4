"""Normalized schedule assembly and serialization.

Events are rasterized onto the 15-minute grid by proportional minute
overlap (each step accumulates overlap-minutes times event magnitude), so
channel totals equal the event sums exactly up to rounding.  Channels are
then normalized by their own annual maximum; the occupants column is a
fraction already and passes through unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .diary_ingest import N_STEPS
from .distributions import EmpiricalDistribution
from .household import (
    MINUTES_PER_DAY,
    Appliance,
    Fixture,
    ApplianceEvent,
    HouseholdResult,
    WaterEvent,
    modulate_schedule,
)
from .occupant_sim import SimCalendar

SCHEDULE_COLUMNS = (
    "occupants",
    "lighting",
    "plug_loads",
    "ceiling_fan",
    "cooking_range",
    "dishwasher_power",
    "clothes_washer_power",
    "clothes_dryer_power",
    "dishwasher_water",
    "clothes_washer_water",
    "showers",
    "baths",
    "sinks",
)

MODULATED_END_USES = ("lighting", "plug_loads", "ceiling_fan")

POWER_CHANNEL = {
    Appliance.COOKING_RANGE: "cooking_range",
    Appliance.DISHWASHER: "dishwasher_power",
    Appliance.CLOTHES_WASHER: "clothes_washer_power",
    Appliance.CLOTHES_DRYER: "clothes_dryer_power",
}
WATER_CHANNEL = {
    Appliance.DISHWASHER: "dishwasher_water",
    Appliance.CLOTHES_WASHER: "clothes_washer_water",
}
FIXTURE_CHANNEL = {
    Fixture.SHOWER: "showers",
    Fixture.BATH: "baths",
    Fixture.SINK: "sinks",
    Fixture.DISHWASHER_WATER: "dishwasher_water",
    Fixture.CLOTHES_WASHER_WATER: "clothes_washer_water",
}

REQUIRED_BUNDLE = (
    "shower.duration",
    "shower.flow",
    "bath.duration",
    "bath.flow",
    "sink.onset",
    "sink.count",
    "sink.duration",
    "sink.flow",
    "cooking_range.power.duration",
    "cooking_range.power.level",
    "dishwasher.power.duration",
    "dishwasher.power.level",
    "dishwasher.water.duration",
    "dishwasher.water.flow",
    "clothes_washer.power.duration",
    "clothes_washer.power.level",
    "clothes_washer.water.duration",
    "clothes_washer.water.flow",
    "clothes_dryer.power.duration",
    "clothes_dryer.power.level",
)


class ScheduleError(ValueError):
    """Invalid schedule data or file."""


@dataclass
class HouseholdScheduleYear:
    """Normalized year of 15-minute schedule values, one array per column."""

    n_days: int
    columns: dict[str, np.ndarray]
    peaks: dict[str, float]

    def __post_init__(self) -> None:
        n_steps = self.n_days * N_STEPS
        missing = [c for c in SCHEDULE_COLUMNS if c not in self.columns]
        if missing:
            raise ScheduleError(f"missing columns: {missing}")
        for name, col in self.columns.items():
            if np.asarray(col).shape != (n_steps,):
                raise ScheduleError(f"column {name} must have {n_steps} steps")


def _accumulate(series: np.ndarray, start: float, duration: float, magnitude: float) -> None:
    if duration <= 0:
        return
    horizon = series.shape[0] * 15.0
    end = min(start + duration, horizon)
    start = max(start, 0.0)
    if end <= start:
        return
    first = int(start // 15)
    last = min(int(math.ceil(end / 15)) - 1, series.shape[0] - 1)
    for j in range(first, last + 1):
        overlap = min(end, (j + 1) * 15.0) - max(start, j * 15.0)
        series[j] += overlap * magnitude


def rasterize_events(
    appliance_events: list[ApplianceEvent],
    water_events: list[WaterEvent],
    n_days: int,
) -> dict[str, np.ndarray]:
    """Rasterize events to raw per-step channel series (magnitude-minutes)."""
    n_steps = n_days * N_STEPS
    channels = {
        name: np.zeros(n_steps)
        for name in SCHEDULE_COLUMNS
        if name not in ("occupants",) + MODULATED_END_USES
    }
    for ev in appliance_events:
        _accumulate(channels[POWER_CHANNEL[ev.appliance]], ev.start, ev.power_duration, ev.power_level)
        if ev.water_duration > 0:
            channel = WATER_CHANNEL.get(ev.appliance)
            if channel is None:
                raise ScheduleError(f"{ev.appliance.value} events cannot carry water")
            _accumulate(channels[channel], ev.start, ev.water_duration, ev.water_flow)
    for ev in water_events:
        _accumulate(channels[FIXTURE_CHANNEL[ev.fixture]], ev.start, ev.duration, ev.flow)
    return channels


def normalize_columns(raw: dict[str, np.ndarray], n_days: int) -> HouseholdScheduleYear:
    """Scale every channel except occupants by its annual maximum.

    All-zero channels stay zero and record a zero peak.
    """
    columns: dict[str, np.ndarray] = {}
    peaks: dict[str, float] = {}
    for name in SCHEDULE_COLUMNS:
        col = np.asarray(raw[name], dtype=np.float64)
        if name == "occupants":
            columns[name] = col.copy()
            continue
        peak = float(col.max()) if col.size else 0.0
        peaks[name] = peak
        columns[name] = col / peak if peak > 0 else col.copy()
    return HouseholdScheduleYear(n_days, columns, peaks)


def assemble_schedule(
    result: HouseholdResult,
    reference: dict[tuple[str, str], np.ndarray],
    calendar: SimCalendar,
    modulation: str = "present",
) -> HouseholdScheduleYear:
    """Combine rasterized events, modulated end uses, and the occupancy trace."""
    raw = rasterize_events(result.appliance_events, result.water_events, calendar.n_days)
    raw["occupants"] = result.trace.present_fraction
    for use in MODULATED_END_USES:
        ref_year = build_reference_year(reference, use, calendar)
        raw[use] = modulate_schedule(ref_year, result.trace, modulation)
    return normalize_columns(raw, calendar.n_days)


def write_schedule_file(path: str | Path, schedule: HouseholdScheduleYear) -> None:
    """Comment lines recording per-channel peaks, a header row, then
    one row of 6-decimal values per step."""
    lines = [f"# peak,{name},{schedule.peaks[name]:.9g}" for name in SCHEDULE_COLUMNS if name != "occupants"]
    lines.append(",".join(SCHEDULE_COLUMNS))
    data = np.column_stack([schedule.columns[name] for name in SCHEDULE_COLUMNS])
    for row in data:
        lines.append(",".join(f"{v:.6f}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_schedule_file(path: str | Path) -> HouseholdScheduleYear:
    path = Path(path)
    peaks: dict[str, float] = {}
    header: list[str] | None = None
    rows: list[list[float]] = []
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            _, name, value = line[1:].strip().split(",")
            peaks[name] = float(value)
            continue
        if header is None:
            header = line.split(",")
            if tuple(header) != SCHEDULE_COLUMNS:
                raise ScheduleError(f"{path}: unexpected column header")
            continue
        rows.append([float(x) for x in line.split(",")])
    if header is None or not rows:
        raise ScheduleError(f"{path}: no schedule data")
    data = np.array(rows)
    if data.shape[0] % N_STEPS != 0:
        raise ScheduleError(f"{path}: row count {data.shape[0]} is not a whole number of days")
    columns = {name: data[:, i] for i, name in enumerate(SCHEDULE_COLUMNS)}
    return HouseholdScheduleYear(data.shape[0] // N_STEPS, columns, peaks)


# -- reference schedules and distribution bundles ---------------------------


def read_reference_file(path: str | Path) -> np.ndarray:
    """96 lines of step,value for one end use and day type."""
    path = Path(path)
    values = np.zeros(N_STEPS)
    seen = 0
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        step_s, v = line.split(",")
        values[int(step_s)] = float(v)
        seen += 1
    if seen != N_STEPS:
        raise ScheduleError(f"{path}: expected {N_STEPS} rows, got {seen}")
    if not np.any(values != 0):
        raise ScheduleError(f"{path}: reference schedule is all zero")
    return values


def write_reference_file(path: str | Path, values: np.ndarray) -> None:
    lines = [f"{i},{v:.12g}" for i, v in enumerate(np.asarray(values))]
    Path(path).write_text("\n".join(lines) + "\n")


def load_reference_dir(directory: str | Path) -> dict[tuple[str, str], np.ndarray]:
    """Load `<end_use>.<wd|we>.ref` files for every modulated end use."""
    directory = Path(directory)
    out: dict[tuple[str, str], np.ndarray] = {}
    for use in MODULATED_END_USES:
        for day_type in ("WD", "WE"):
            path = directory / f"{use}.{day_type.lower()}.ref"
            if not path.exists():
                raise ScheduleError(f"missing reference schedule: {path}")
            out[(use, day_type)] = read_reference_file(path)
    return out


def build_reference_year(
    reference: dict[tuple[str, str], np.ndarray], use: str, calendar: SimCalendar
) -> np.ndarray:
    """Tile per-day-type reference days across the calendar."""
    days = [reference[(use, calendar.day_type(d))] for d in range(calendar.n_days)]
    return np.concatenate(days)


def load_bundle(directory: str | Path) -> dict[str, EmpiricalDistribution]:
    """Load the event sampling bundle; every reserved name must be present."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ScheduleError(f"bundle directory not found: {directory}")
    bundle: dict[str, EmpiricalDistribution] = {}
    for name in REQUIRED_BUNDLE:
        path = directory / name
        if not path.exists():
            raise ScheduleError(f"bundle is missing channel '{name}' ({path})")
        bundle[name] = EmpiricalDistribution.read(path)
    return bundle


def write_bundle(directory: str | Path, bundle: dict[str, EmpiricalDistribution]) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, dist in bundle.items():
        dist.write(directory / name)
