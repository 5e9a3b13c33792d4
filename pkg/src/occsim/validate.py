"""Statistical comparison of simulated behavior against a reference corpus.

Durations and onsets are compared with a two-sample Kolmogorov-Smirnov
statistic over weighted empirical distributions, daily occurrence counts
with a chi-square test (bins pooled until every expected count is at least
five), and daily activity profiles with mean absolute deviation.  Profile
uncertainty bands are mean +/- 1.96 standard errors across homes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import chi2

from .diary_ingest import FULL_ALPHABET, STATE_TOKENS, ActivityState, StateSequence
from .distributions import EmpiricalDistribution
from .markov_train import ActivityStats, estimate_statistics

Z_95 = 1.96
MIN_EXPECTED = 5.0


class ValidationError(ValueError):
    """Invalid validation input."""


def ks_statistic(a: EmpiricalDistribution | None, b: EmpiricalDistribution | None) -> float | None:
    """Two-sample KS over weighted empirical distributions.

    An activity absent on both sides has no statistic (None); absent on one
    side only is maximal disagreement (1.0).
    """
    if a is None and b is None:
        return None
    if a is None or b is None:
        return 1.0
    points = np.union1d(a.support, b.support)
    return float(np.max(np.abs(a.cdf_at(points) - b.cdf_at(points))))


def occurrence_chi2_p(
    sim: EmpiricalDistribution, ref: EmpiricalDistribution, n_sim_days: int
) -> float:
    """Chi-square p-value for simulated daily occurrence counts.

    Expected counts come from the reference proportions scaled to the
    simulated day total; consecutive bins pool until each expected count
    reaches five, with any remainder folded into the last bin.
    """
    support = np.union1d(sim.support, ref.support)
    obs = sim.cdf_at(support) - sim.cdf_at(support - 0.5)
    exp = ref.cdf_at(support) - ref.cdf_at(support - 0.5)
    obs = obs * n_sim_days
    exp = exp * n_sim_days
    pooled_obs: list[float] = []
    pooled_exp: list[float] = []
    acc_o = acc_e = 0.0
    for o, e in zip(obs, exp):
        acc_o += o
        acc_e += e
        if acc_e >= MIN_EXPECTED:
            pooled_obs.append(acc_o)
            pooled_exp.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if pooled_obs:
            pooled_obs[-1] += acc_o
            pooled_exp[-1] += acc_e
        else:
            pooled_obs.append(acc_o)
            pooled_exp.append(acc_e)
    k = len(pooled_obs)
    if k < 2:
        return 1.0
    obs_arr = np.array(pooled_obs)
    exp_arr = np.array(pooled_exp)
    if np.any(exp_arr <= 0):
        return 0.0
    stat = float(((obs_arr - exp_arr) ** 2 / exp_arr).sum())
    return float(chi2.sf(stat, k - 1))


@dataclass
class ActivityComparison:
    activity: ActivityState
    ks_duration: float | None
    ks_onset: float | None
    occurrence_chi2_p: float
    profile_mad: float
    n_sim_days: int
    n_ref_days: int
    n_sim_events: int
    n_ref_events: int


@dataclass
class ComparisonReport:
    rows: list[ActivityComparison]

    def by_activity(self) -> dict[ActivityState, ActivityComparison]:
        return {r.activity: r for r in self.rows}

    def to_records(self) -> list[tuple[str, str, str]]:
        records = []
        for r in self.rows:
            name = STATE_TOKENS[r.activity]
            def fmt(v):
                return "na" if v is None else f"{v:.9g}"
            records += [
                ("ks_duration", name, fmt(r.ks_duration)),
                ("ks_onset", name, fmt(r.ks_onset)),
                ("occurrence_chi2_p", name, fmt(r.occurrence_chi2_p)),
                ("profile_mad", name, fmt(r.profile_mad)),
                ("n_sim_days", name, str(r.n_sim_days)),
                ("n_ref_days", name, str(r.n_ref_days)),
                ("n_sim_events", name, str(r.n_sim_events)),
                ("n_ref_events", name, str(r.n_ref_events)),
            ]
        return records

    def write(self, path: str | Path) -> None:
        lines = ["metric,activity,value"]
        lines += [",".join(rec) for rec in self.to_records()]
        Path(path).write_text("\n".join(lines) + "\n")

    def format_table(self) -> str:
        head = f"{'activity':<16} {'ks_dur':>8} {'ks_onset':>8} {'chi2_p':>8} {'mad':>8} {'events':>12}"
        out = [head, "-" * len(head)]
        for r in self.rows:
            def fmt(v):
                return "na" if v is None else f"{v:8.4f}"
            out.append(
                f"{STATE_TOKENS[r.activity]:<16} {fmt(r.ks_duration):>8} {fmt(r.ks_onset):>8} "
                f"{r.occurrence_chi2_p:8.4f} {r.profile_mad:8.4f} "
                f"{r.n_sim_events:>5}/{r.n_ref_events:<6}"
            )
        return "\n".join(out)


def compare_behavior(
    sim_days: list[StateSequence],
    ref_stats: dict[ActivityState, ActivityStats],
    activities: tuple[ActivityState, ...] | None = None,
) -> ComparisonReport:
    """Reduce simulated days and compare them per activity against reference
    statistics."""
    if not sim_days:
        raise ValidationError("no simulated days")
    rows = []
    for activity in activities or tuple(ref_stats):
        ref = ref_stats[activity]
        sim = estimate_statistics(sim_days, activity)
        rows.append(
            ActivityComparison(
                activity,
                ks_statistic(sim.duration_dist, ref.duration_dist),
                ks_statistic(sim.onset_dist, ref.onset_dist),
                occurrence_chi2_p(sim.occurrences_dist, ref.occurrences_dist, sim.n_days),
                float(np.abs(sim.daily_profile - ref.daily_profile).mean()),
                sim.n_days,
                ref.n_days,
                sim.n_events,
                ref.n_events,
            )
        )
    return ComparisonReport(rows)


@dataclass
class ProfileBand:
    """Pointwise mean +/- 1.96 SE band across homes."""

    mean: np.ndarray
    se: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


def band(profiles: np.ndarray) -> ProfileBand:
    """Uncertainty band over per-home profiles (rows are homes)."""
    profiles = np.asarray(profiles, dtype=np.float64)
    if profiles.ndim != 2 or profiles.shape[0] < 2:
        raise ValidationError("band needs at least two home profiles")
    mean = profiles.mean(axis=0)
    se = profiles.std(axis=0, ddof=1) / np.sqrt(profiles.shape[0])
    return ProfileBand(mean, se, mean - Z_95 * se, mean + Z_95 * se)


def coverage(profile: np.ndarray, b: ProfileBand) -> float:
    """Fraction of steps where `profile` lies inside the band."""
    profile = np.asarray(profile, dtype=np.float64)
    inside = (profile >= b.lower) & (profile <= b.upper)
    return float(inside.mean())
