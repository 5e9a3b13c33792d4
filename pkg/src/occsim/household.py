"""Household assembly: occupants, shared events, water draws, occupancy traces.

Occupant-level activity runs become household appliance and water events.
Cooking, dishwashing, and laundry intervals merge across occupants into
single shared-appliance events (overlapping or abutting intervals union);
personal hygiene stays per-occupant and is never merged.  Event times are
minutes from the start of the simulation year.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import streams
from .diary_ingest import N_STEPS, STEP_MINUTES, ActivityState
from .distributions import EmpiricalDistribution
from .clustering import DEFAULT_CLUSTER_SHARES
from .markov_train import ClusterDayModel
from .occupant_sim import (
    RETRY_BUDGET,
    OccupantProfile,
    SimCalendar,
    SimulationError,
    simulate_year,
)

MINUTES_PER_DAY = 1440


class Appliance(enum.Enum):
    COOKING_RANGE = "cooking_range"
    DISHWASHER = "dishwasher"
    CLOTHES_WASHER = "clothes_washer"
    CLOTHES_DRYER = "clothes_dryer"


class Fixture(enum.Enum):
    SHOWER = "shower"
    BATH = "bath"
    SINK = "sink"
    DISHWASHER_WATER = "dishwasher_water"
    CLOTHES_WASHER_WATER = "clothes_washer_water"


# Activities whose intervals merge into one shared appliance.
MERGEABLE_ACTIVITIES = (
    ActivityState.COOKING,
    ActivityState.DISHWASHING,
    ActivityState.LAUNDRY,
)
ACTIVITY_APPLIANCE = {
    ActivityState.COOKING: Appliance.COOKING_RANGE,
    ActivityState.DISHWASHING: Appliance.DISHWASHER,
    ActivityState.LAUNDRY: Appliance.CLOTHES_WASHER,
}
# Appliances that also draw water during operation.
WATER_APPLIANCES = (Appliance.DISHWASHER, Appliance.CLOTHES_WASHER)

DEFAULT_SHOWER_FRACTION = 0.921


class HouseholdError(ValueError):
    """Invalid household configuration or event input."""


class BundleError(KeyError):
    """A required sampling distribution is missing from the bundle."""


@dataclass
class HouseholdConfig:
    """Sampling configuration for household composition and water behavior.

    `vacation` is a half-open day window (start_day, end_day).
    """

    occupant_count_dist: EmpiricalDistribution
    cluster_shares_wd: tuple[float, ...] = DEFAULT_CLUSTER_SHARES
    cluster_shares_we: tuple[float, ...] = DEFAULT_CLUSTER_SHARES
    vacation: tuple[int, int] | None = None
    shower_fraction: float = DEFAULT_SHOWER_FRACTION

    def __post_init__(self) -> None:
        for shares in (self.cluster_shares_wd, self.cluster_shares_we):
            if abs(sum(shares) - 1.0) > 1e-9:
                raise HouseholdError(f"cluster shares sum to {sum(shares)}, not 1")
            if any(s < 0 for s in shares):
                raise HouseholdError("cluster shares must be nonnegative")
        if not 0.0 <= self.shower_fraction <= 1.0:
            raise HouseholdError("shower_fraction must be in [0, 1]")

    def shares_for(self, day_type: str) -> tuple[float, ...]:
        return self.cluster_shares_wd if day_type == "WD" else self.cluster_shares_we

    @classmethod
    def read(cls, path: str | Path) -> "HouseholdConfig":
        fields: dict[str, str] = {}
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            fields[key.strip()] = value.strip()
        if "occupant_count" not in fields:
            raise HouseholdError(f"{path}: missing occupant_count")
        pairs = [item.split(":") for item in fields["occupant_count"].split(",")]
        counts = EmpiricalDistribution(
            np.array([float(v) for v, _ in pairs]),
            np.array([float(p) for _, p in pairs]),
            unit="count",
        )
        def shares(key: str) -> tuple[float, ...]:
            if key not in fields:
                return DEFAULT_CLUSTER_SHARES
            return tuple(float(x) for x in fields[key].split(","))
        vacation = None
        if "vacation" in fields and fields["vacation"]:
            lo, hi = fields["vacation"].split(",")
            vacation = (int(lo), int(hi))
        return cls(
            counts,
            shares("cluster_shares_wd"),
            shares("cluster_shares_we"),
            vacation,
            float(fields.get("shower_fraction", DEFAULT_SHOWER_FRACTION)),
        )

    def write(self, path: str | Path) -> None:
        dist = ",".join(
            f"{int(v) if float(v).is_integer() else v}:{p:.12g}"
            for v, p in zip(self.occupant_count_dist.support, self.occupant_count_dist.probs)
        )
        lines = [
            f"occupant_count = {dist}",
            "cluster_shares_wd = " + ",".join(f"{s:.12g}" for s in self.cluster_shares_wd),
            "cluster_shares_we = " + ",".join(f"{s:.12g}" for s in self.cluster_shares_we),
            f"shower_fraction = {self.shower_fraction:.12g}",
        ]
        if self.vacation is not None:
            lines.append(f"vacation = {self.vacation[0]},{self.vacation[1]}")
        Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class ApplianceEvent:
    """One appliance operation; water fields are zero for dry appliances."""

    appliance: Appliance
    start: float  # minutes from year start
    power_duration: float  # minutes
    power_level: float  # fraction of nameplate power
    water_duration: float = 0.0
    water_flow: float = 0.0


@dataclass
class WaterEvent:
    fixture: Fixture
    start: float  # minutes from year start
    duration: float  # minutes, >= 1
    flow: float  # volume per minute


@dataclass
class OccupancyTrace:
    """Household occupancy per step.

    present counts states other than Away; active counts states other than
    Away and Sleep.  `active_fraction` backs the awake-only modulation
    switch.
    """

    present_fraction: np.ndarray
    active_any: np.ndarray
    n_occupants: int
    active_fraction: np.ndarray = field(default=None)  # type: ignore[assignment]


@dataclass
class HouseholdResult:
    index: int
    n_occupants: int
    profiles: list[OccupantProfile]
    states: np.ndarray  # (n_occupants, 96 * n_days) int8
    trace: OccupancyTrace
    appliance_events: list[ApplianceEvent]
    water_events: list[WaterEvent]
    placement_failures: int = 0


def _draw_index(shares, rng: np.random.Generator) -> int:
    cum = np.cumsum(np.asarray(shares, dtype=np.float64))
    r = rng.random() * cum[-1]
    return int(min(np.searchsorted(cum, r, side="right"), len(cum) - 1))


def sample_household(
    config: HouseholdConfig, rng: np.random.Generator, index: int = 0
) -> tuple[int, list[OccupantProfile]]:
    """Draw occupant count, then weekday and weekend clusters per occupant."""
    n = config.occupant_count_dist.sample_int(rng)
    if n < 1:
        raise HouseholdError(f"sampled occupant count {n} is not positive")
    profiles = [
        OccupantProfile(
            f"h{index}o{o}",
            _draw_index(config.cluster_shares_wd, rng),
            _draw_index(config.cluster_shares_we, rng),
        )
        for o in range(n)
    ]
    return n, profiles


def activity_intervals(states: np.ndarray, activity: ActivityState) -> list[tuple[float, float]]:
    """Maximal runs of `activity` as (start, end) minutes from year start."""
    B = np.asarray(states) == int(activity)
    edges = np.diff(np.concatenate([[0], B.astype(np.int8), [0]]))
    starts = np.nonzero(edges == 1)[0]
    ends = np.nonzero(edges == -1)[0]
    return [(float(s * STEP_MINUTES), float(e * STEP_MINUTES)) for s, e in zip(starts, ends)]


def merge_shared_events(
    per_occupant: list[list[tuple[float, float]]], activity: ActivityState
) -> list[tuple[float, float]]:
    """Union of intervals across occupants; overlapping or abutting merge.

    Only cooking, dishwashing, and laundry intervals may merge; hygiene is
    per-person and refusing it here keeps showers unmergeable by
    construction.
    """
    if activity not in MERGEABLE_ACTIVITIES:
        raise HouseholdError(f"{ActivityState(activity).name} events are never merged")
    flat = sorted(iv for ivs in per_occupant for iv in ivs)
    merged: list[tuple[float, float]] = []
    for start, end in flat:
        if end < start:
            raise HouseholdError(f"inverted interval ({start}, {end})")
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def _dist(bundle: dict[str, EmpiricalDistribution], name: str) -> EmpiricalDistribution:
    try:
        return bundle[name]
    except KeyError:
        raise BundleError(f"missing distribution '{name}'")


def attach_appliance_events(
    intervals_by_activity: dict[ActivityState, list[tuple[float, float]]],
    bundle: dict[str, EmpiricalDistribution],
    rng: np.random.Generator,
    year_minutes: float | None = None,
) -> list[ApplianceEvent]:
    """Sample power (and water) characteristics for merged activity intervals.

    Laundry intervals produce a washer event plus a dryer event starting
    when the washer's power cycle ends; a dryer whose start would fall past
    the end of the year is dropped.  Power cycles may outlast the activity
    interval; they are never clipped to it.
    """
    events: list[ApplianceEvent] = []
    for activity in MERGEABLE_ACTIVITIES:
        intervals = intervals_by_activity.get(activity)
        if not intervals:
            continue
        appliance = ACTIVITY_APPLIANCE[activity]
        key = appliance.value
        p_dur = _dist(bundle, f"{key}.power.duration")
        p_lvl = _dist(bundle, f"{key}.power.level")
        w_dur = w_flow = None
        if appliance in WATER_APPLIANCES:
            w_dur = _dist(bundle, f"{key}.water.duration")
            w_flow = _dist(bundle, f"{key}.water.flow")
        chained = None
        if appliance is Appliance.CLOTHES_WASHER:
            chained = (
                _dist(bundle, "clothes_dryer.power.duration"),
                _dist(bundle, "clothes_dryer.power.level"),
            )
        for start, _end in sorted(intervals):
            ev = ApplianceEvent(
                appliance,
                start,
                p_dur.sample(rng),
                p_lvl.sample(rng),
                w_dur.sample(rng) if w_dur else 0.0,
                w_flow.sample(rng) if w_flow else 0.0,
            )
            events.append(ev)
            if chained is not None:
                dryer_start = ev.start + ev.power_duration
                if year_minutes is None or dryer_start < year_minutes:
                    events.append(
                        ApplianceEvent(
                            Appliance.CLOTHES_DRYER,
                            dryer_start,
                            chained[0].sample(rng),
                            chained[1].sample(rng),
                        )
                    )
    return events


def attach_hygiene_water(
    per_occupant: list[list[tuple[float, float]]],
    bundle: dict[str, EmpiricalDistribution],
    config: HouseholdConfig,
    rng: np.random.Generator,
) -> list[WaterEvent]:
    """One shower-or-bath draw per hygiene interval, per occupant.

    The fixture is a shower with probability `shower_fraction`, else a
    bath.  The draw starts uniformly (1-minute resolution) within the part
    of the interval that fits its duration; a duration longer than the
    interval is clipped to it.
    """
    events: list[WaterEvent] = []
    for intervals in per_occupant:
        for start, end in sorted(intervals):
            is_shower = rng.random() < config.shower_fraction
            key = "shower" if is_shower else "bath"
            duration = _dist(bundle, f"{key}.duration").sample(rng)
            flow = _dist(bundle, f"{key}.flow").sample(rng)
            window = end - start
            if duration >= window:
                duration = window
                offset = 0
            else:
                offset = int(rng.integers(0, int(window - duration) + 1))
            events.append(
                WaterEvent(
                    Fixture.SHOWER if is_shower else Fixture.BATH,
                    start + offset,
                    duration,
                    flow,
                )
            )
    return events


def generate_sink_events(
    trace: OccupancyTrace,
    bundle: dict[str, EmpiricalDistribution],
    rng: np.random.Generator,
) -> list[WaterEvent]:
    """Household-level sink draws across the year.

    Per day, a sampled number of events each draws an onset step; onsets
    landing where no occupant is active are resampled within the retry
    budget and otherwise dropped.
    """
    count_dist = _dist(bundle, "sink.count")
    onset_dist = _dist(bundle, "sink.onset")
    dur_dist = _dist(bundle, "sink.duration")
    flow_dist = _dist(bundle, "sink.flow")
    active = trace.active_any
    n_days = active.shape[0] // N_STEPS
    events: list[WaterEvent] = []
    for day in range(n_days):
        base = day * N_STEPS
        for _ in range(count_dist.sample_int(rng)):
            for _ in range(RETRY_BUDGET):
                step = onset_dist.sample_int(rng)
                if 0 <= step < N_STEPS and active[base + step]:
                    events.append(
                        WaterEvent(
                            Fixture.SINK,
                            float((base + step) * STEP_MINUTES),
                            dur_dist.sample(rng),
                            flow_dist.sample(rng),
                        )
                    )
                    break
    return events


def occupancy_fraction(states: np.ndarray) -> OccupancyTrace:
    """Reduce per-occupant states to household presence and activity."""
    states = np.atleast_2d(np.asarray(states))
    n = states.shape[0]
    present = (states != int(ActivityState.AWAY)).sum(axis=0) / n
    active = states >= int(ActivityState.HOME_ACTIVE)
    return OccupancyTrace(
        present_fraction=present.astype(np.float64),
        active_any=active.any(axis=0),
        n_occupants=n,
        active_fraction=active.sum(axis=0) / n,
    )


def modulate_schedule(
    reference: np.ndarray, trace: OccupancyTrace, mode: str = "present"
) -> np.ndarray:
    """Scale a reference schedule by occupancy, pinned to each day's minimum.

    out = daily_min + (reference - daily_min) * fraction.  Full occupancy
    returns the reference exactly and zero occupancy returns the day's
    minimum exactly (bit-for-bit).  A 96-step reference is tiled across the
    year. `mode` picks the occupancy signal: "present" or "active".
    """
    if mode == "present":
        frac = trace.present_fraction
    elif mode == "active":
        frac = trace.active_fraction
    else:
        raise HouseholdError(f"unknown modulation mode {mode!r}")
    n_steps = frac.shape[0]
    reference = np.asarray(reference, dtype=np.float64)
    if reference.shape == (N_STEPS,) and n_steps != N_STEPS:
        reference = np.tile(reference, n_steps // N_STEPS)
    if reference.shape != (n_steps,):
        raise HouseholdError(f"reference length {reference.shape} does not match trace {n_steps}")
    n_days = n_steps // N_STEPS
    ref = reference.reshape(n_days, N_STEPS)
    f = frac.reshape(n_days, N_STEPS)
    dmin = ref.min(axis=1, keepdims=True)
    out = dmin + (ref - dmin) * f
    out = np.where(f >= 1.0, ref, out)
    out = np.where(f <= 0.0, np.broadcast_to(dmin, ref.shape), out)
    return out.reshape(-1)


def apply_vacation(
    states: np.ndarray,
    appliance_events: list[ApplianceEvent],
    water_events: list[WaterEvent],
    window: tuple[int, int] | None,
    n_days: int,
) -> tuple[np.ndarray, list[ApplianceEvent], list[WaterEvent]]:
    """Force Away across a half-open day window and drop events starting in it.

    Events that start before the window and extend into it are retained.
    Returns copies; a missing window returns the inputs unchanged.
    """
    if window is None:
        return states, appliance_events, water_events
    start_day, end_day = window
    if not (0 <= start_day < end_day <= n_days):
        raise HouseholdError(f"vacation window {window} is inverted or outside the calendar")
    states = np.array(states, copy=True)
    states[..., start_day * N_STEPS : end_day * N_STEPS] = int(ActivityState.AWAY)
    lo = start_day * MINUTES_PER_DAY
    hi = end_day * MINUTES_PER_DAY
    keep_a = [ev for ev in appliance_events if not lo <= ev.start < hi]
    keep_w = [ev for ev in water_events if not lo <= ev.start < hi]
    return states, keep_a, keep_w


def build_household(
    index: int,
    models: dict[str, dict[int, ClusterDayModel]],
    bundle: dict[str, EmpiricalDistribution],
    config: HouseholdConfig,
    calendar: SimCalendar,
    base_seed: int,
    approach: int = 3,
) -> HouseholdResult:
    """Simulate one household for the whole calendar.

    Derives all streams from (base_seed, household index), so households
    are independent and adding one never changes another.
    """
    h_seq = streams.child(streams.root(base_seed), streams.HOUSEHOLD, index)
    n, profiles = sample_household(config, streams.generator(h_seq, 0), index)
    n_steps = calendar.n_days * N_STEPS
    states = np.empty((n, n_steps), dtype=np.int8)
    failures = 0
    for o, profile in enumerate(profiles):
        days, n_fail = simulate_year(
            profile, models, calendar, streams.child(h_seq, streams.OCCUPANT, o), approach
        )
        states[o] = np.concatenate([d.states for d in days])
        failures += n_fail

    year_minutes = calendar.n_days * MINUTES_PER_DAY
    merged = {
        activity: merge_shared_events(
            [activity_intervals(states[o], activity) for o in range(n)], activity
        )
        for activity in MERGEABLE_ACTIVITIES
    }
    appliance_events = attach_appliance_events(
        merged, bundle, streams.generator(h_seq, streams.APPLIANCES), year_minutes
    )
    hygiene = [activity_intervals(states[o], ActivityState.PERSONAL_HYGIENE) for o in range(n)]
    water_events = attach_hygiene_water(
        hygiene, bundle, config, streams.generator(h_seq, streams.HYGIENE)
    )
    trace = occupancy_fraction(states)
    water_events += generate_sink_events(trace, bundle, streams.generator(h_seq, streams.SINKS))

    states, appliance_events, water_events = apply_vacation(
        states, appliance_events, water_events, config.vacation, calendar.n_days
    )
    trace = occupancy_fraction(states)
    return HouseholdResult(
        index, n, profiles, states, trace, appliance_events, water_events, failures
    )
