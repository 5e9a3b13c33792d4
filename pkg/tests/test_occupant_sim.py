import itertools

import numpy as np
import pytest

from occsim import streams
from occsim.diary_ingest import (
    FULL_ALPHABET,
    N_STEPS,
    PRESENCE_ALPHABET,
    ActivityState,
)
from occsim.distributions import EmpiricalDistribution, point_mass
from occsim.markov_train import ActivityStats, ClusterDayModel, TPMSet, _runs
from occsim.occupant_sim import (
    OccupantDaySchedule,
    OccupantProfile,
    SimCalendar,
    SimulationError,
    _chain_states,
    simulate_day_approach1,
    simulate_day_approach2,
    simulate_day_approach3,
    simulate_days_approach2,
    simulate_year,
)

SL = int(ActivityState.SLEEP)
AW = int(ActivityState.AWAY)
HA = int(ActivityState.HOME_ACTIVE)
CO = int(ActivityState.COOKING)
PH = int(ActivityState.PERSONAL_HYGIENE)

S_FULL = len(FULL_ALPHABET)


def const_tpms(row_map=None, initial_state=0, alphabet=FULL_ALPHABET, T=95, day_type="WD"):
    """Identity (absorbing) matrices with whole-horizon row overrides."""
    S = len(alphabet)
    m = np.tile(np.eye(S), (T, 1, 1))
    for s, row in (row_map or {}).items():
        m[:, s, :] = row
    return TPMSet(0, day_type, alphabet, np.eye(S)[initial_state], m)


def row(**mass):
    out = np.zeros(S_FULL)
    for name, p in mass.items():
        out[int(ActivityState[name])] = p
    return out


def stats_for(activity, duration_min=None, onset_step=None, occurrences=None):
    occ = occurrences if occurrences is not None else point_mass(1.0, "count")
    return ActivityStats(
        activity,
        point_mass(duration_min, "minutes") if duration_min is not None else None,
        point_mass(onset_step, "steps") if onset_step is not None else None,
        occ,
        np.zeros(N_STEPS),
    )


def test_worked_example_hold_and_resume():
    tpms = const_tpms({PH: row(PERSONAL_HYGIENE=0.9, HOME_ACTIVE=0.1)})
    tpms.matrices[10, SL] = row(PERSONAL_HYGIENE=1.0)
    stats = {ActivityState.PERSONAL_HYGIENE: stats_for(ActivityState.PERSONAL_HYGIENE, 60.0)}
    for seed in (0, 1, 99):
        sched = simulate_day_approach3(tpms, stats, np.random.default_rng(seed))
        expected = np.full(N_STEPS, HA, dtype=np.int8)
        expected[:11] = SL
        expected[11:15] = PH  # 60 min hold = 4 steps
        assert np.array_equal(sched.states, expected)
        assert sched.day_type == "WD"


def test_resume_exclusion_caps_event_runs():
    # self-heavy cooking row: without the resume exclusion, runs would
    # stretch far past the sampled two-step duration
    tpms = const_tpms(
        {
            CO: row(COOKING=0.99, HOME_ACTIVE=0.01),
            HA: row(HOME_ACTIVE=0.5, COOKING=0.5),
        },
        initial_state=CO,
    )
    stats = {ActivityState.COOKING: stats_for(ActivityState.COOKING, 30.0)}
    rng = np.random.default_rng(42)
    days = np.stack(
        [simulate_day_approach3(tpms, stats, rng).states for _ in range(200)]
    )
    rows, starts, lengths, _ = _runs(days == CO)
    interior = starts + lengths <= N_STEPS - 1
    assert lengths[interior].size > 100
    assert np.all(lengths[interior] == 2)
    assert np.all(lengths <= 2)


def test_degenerate_self_row_extends_hold():
    tpms = const_tpms({CO: row(COOKING=1.0)}, initial_state=CO)
    stats = {ActivityState.COOKING: stats_for(ActivityState.COOKING, 15.0)}
    sched = simulate_day_approach3(tpms, stats, np.random.default_rng(0))
    assert np.all(sched.states == CO)


def test_hold_clipped_at_day_end():
    tpms = const_tpms({CO: row(COOKING=0.5, HOME_ACTIVE=0.5)})
    tpms.matrices[93, SL] = row(COOKING=1.0)
    stats = {ActivityState.COOKING: stats_for(ActivityState.COOKING, 600.0)}
    sched = simulate_day_approach3(tpms, stats, np.random.default_rng(3))
    assert np.all(sched.states[:94] == SL)
    assert np.all(sched.states[94:] == CO)


def test_missing_duration_dist_defaults_to_one_step():
    tpms = const_tpms({CO: row(COOKING=0.7, HOME_ACTIVE=0.3)})
    tpms.matrices[5, SL] = row(COOKING=1.0)
    tpms.matrices[:, HA, :] = row(HOME_ACTIVE=1.0)
    stats = {}  # no stats at all: hold defaults to 15 minutes
    sched = simulate_day_approach3(tpms, stats, np.random.default_rng(1))
    assert sched.states[6] == CO
    assert np.all(sched.states[7:] == HA)


def exact_path_distribution(tpms):
    probs = {}
    S = tpms.n_states
    for path in itertools.product(range(S), repeat=tpms.n_steps):
        p = tpms.initial[path[0]]
        for t in range(tpms.n_steps - 1):
            p *= tpms.matrices[t, path[t], path[t + 1]]
        if p > 0:
            probs[path] = p
    return probs


def _random_reduced_tpms(seed, T=3):
    rng = np.random.default_rng(seed)
    m = rng.uniform(0.05, 1.0, size=(T, 3, 3))
    m /= m.sum(axis=2, keepdims=True)
    init = rng.uniform(0.1, 1.0, size=3)
    init /= init.sum()
    return TPMSet(0, "WD", PRESENCE_ALPHABET, init, m)


def test_chain_matches_exact_path_enumeration():
    tpms = _random_reduced_tpms(17)
    exact = exact_path_distribution(tpms)
    n = 40_000
    rng = np.random.default_rng(5)
    days = simulate_days_approach2(tpms, n, rng)
    counts = {}
    for d in days:
        key = tuple(int(x) for x in d)
        counts[key] = counts.get(key, 0) + 1
    assert set(counts) <= set(exact)
    for path, p in exact.items():
        assert abs(counts.get(path, 0) / n - p) <= 0.02


def test_bulk_and_scalar_agree_on_deterministic_chain():
    tpms = const_tpms({SL: row(AWAY=1.0), AW: row(HOME_ACTIVE=1.0)})
    scalar = _chain_states(tpms, np.random.default_rng(0))
    bulk = simulate_days_approach2(tpms, 3, np.random.default_rng(0))
    assert np.array_equal(bulk[0], scalar)
    assert np.array_equal(bulk[1], scalar)


def test_bulk_and_scalar_same_marginals():
    tpms = _random_reduced_tpms(23, T=6)
    n = 8000
    bulk = simulate_days_approach2(tpms, n, np.random.default_rng(1))
    scalar = np.stack([_chain_states(tpms, np.random.default_rng(1000 + i)) for i in range(n)])
    for t in range(tpms.n_steps):
        fb = np.bincount(bulk[:, t], minlength=3) / n
        fs = np.bincount(scalar[:, t], minlength=3) / n
        assert np.abs(fb - fs).max() <= 0.03


def test_approach1_places_events_in_home_windows():
    presence = const_tpms(
        {HA: np.array([0, 0, 1.0])[None].repeat(3, 0)[0]},
        initial_state=2,
        alphabet=PRESENCE_ALPHABET,
    )
    stats = {ActivityState.COOKING: stats_for(ActivityState.COOKING, 30.0, onset_step=10.0)}
    sched, failures = simulate_day_approach1(presence, stats, np.random.default_rng(0))
    assert failures == 0
    assert np.all(sched.states[10:12] == CO)
    mask = np.ones(N_STEPS, dtype=bool)
    mask[10:12] = False
    assert np.all(sched.states[mask] == HA)


def test_approach1_counts_unplaceable_events():
    presence = const_tpms(initial_state=2, alphabet=PRESENCE_ALPHABET)
    # onset forces the block past the end of the day
    stats = {ActivityState.COOKING: stats_for(ActivityState.COOKING, 30.0, onset_step=95.0)}
    sched, failures = simulate_day_approach1(presence, stats, np.random.default_rng(0))
    assert failures == 1
    assert np.all(sched.states == HA)


def test_approach1_no_overlap_same_onset():
    presence = const_tpms(initial_state=2, alphabet=PRESENCE_ALPHABET)
    stats = {
        ActivityState.COOKING: stats_for(
            ActivityState.COOKING,
            30.0,
            onset_step=10.0,
            occurrences=point_mass(2.0, "count"),
        )
    }
    sched, failures = simulate_day_approach1(presence, stats, np.random.default_rng(0))
    assert failures == 1  # second occurrence keeps hitting the taken window
    assert (sched.states == CO).sum() == 2


def test_approach1_requires_home_window():
    presence = const_tpms(initial_state=1, alphabet=PRESENCE_ALPHABET)  # away all day
    stats = {ActivityState.COOKING: stats_for(ActivityState.COOKING, 30.0, onset_step=10.0)}
    sched, failures = simulate_day_approach1(presence, stats, np.random.default_rng(0))
    assert failures == 1
    assert np.all(sched.states == AW)


def test_calendar_day_types():
    cal = SimCalendar(0, 14)
    assert [cal.day_type(d) for d in range(7)] == ["WD"] * 5 + ["WE"] * 2
    sat = SimCalendar.from_name("Saturday", 7)
    assert sat.day_type(0) == "WE" and sat.day_type(1) == "WE" and sat.day_type(2) == "WD"
    assert SimCalendar.from_name("friday", 3).start_weekday == 4
    with pytest.raises(SimulationError, match="unknown weekday"):
        SimCalendar.from_name("someday", 3)
    with pytest.raises(SimulationError, match="0..6"):
        SimCalendar(7, 3)
    with pytest.raises(SimulationError, match="positive"):
        SimCalendar(0, 0)


def _tiny_models():
    tpms_wd = const_tpms({SL: row(SLEEP=0.6, HOME_ACTIVE=0.4)}, day_type="WD")
    tpms_we = const_tpms({SL: row(SLEEP=0.3, AWAY=0.7)}, day_type="WE")
    stats = {}
    return {
        "WD": {0: ClusterDayModel(0, "WD", tpms_wd, tpms_wd, stats)},
        "WE": {0: ClusterDayModel(0, "WE", tpms_we, tpms_we, stats)},
    }


def test_simulate_year_day_streams_are_stable():
    models = _tiny_models()
    profile = OccupantProfile("o1", 0, 0)
    root = streams.child(streams.root(99), streams.OCCUPANT, 0)
    cal5 = SimCalendar(4, 5)  # friday start: WD WE WE WD WD
    days5, _ = simulate_year(profile, models, cal5, root)
    days3, _ = simulate_year(profile, models, SimCalendar(4, 3), root)
    for a, b in zip(days3, days5):
        assert np.array_equal(a.states, b.states)
        assert a.day_type == b.day_type
    assert [d.day_type for d in days5] == ["WD", "WE", "WE", "WD", "WD"]
    repeat, _ = simulate_year(profile, models, cal5, root)
    assert all(np.array_equal(a.states, b.states) for a, b in zip(days5, repeat))


def test_simulate_year_missing_cluster():
    models = _tiny_models()
    profile = OccupantProfile("o1", 0, 3)
    root = streams.root(1)
    with pytest.raises(SimulationError, match="day_type=WE cluster=3"):
        simulate_year(profile, models, SimCalendar(5, 2), root)


def test_simulate_year_rejects_bad_approach():
    with pytest.raises(SimulationError, match="approach"):
        simulate_year(
            OccupantProfile("o", 0, 0), _tiny_models(), SimCalendar(0, 1), streams.root(0), 4
        )


def test_simulate_year_approaches_run():
    models = _tiny_models()
    profile = OccupantProfile("o1", 0, 0)
    for approach in (1, 2, 3):
        days, failures = simulate_year(
            profile, models, SimCalendar(0, 4), streams.root(3), approach
        )
        assert len(days) == 4
        assert all(d.states.shape == (N_STEPS,) for d in days)
        if approach != 1:
            assert failures == 0


def test_day_schedule_validates_length():
    with pytest.raises(SimulationError, match="96"):
        OccupantDaySchedule(0, "WD", np.zeros(10, dtype=np.int8))


def test_day_type_defaults_to_tpms():
    tpms = const_tpms(day_type="WE")
    sched = simulate_day_approach2(tpms, np.random.default_rng(0))
    assert sched.day_type == "WE"
