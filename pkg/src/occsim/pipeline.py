"""Pipeline stages and project configuration.

Each stage reads files and writes files, so any stage can be rerun in
isolation and a composed run produces byte-identical artifacts to running
the stages one at a time. `run_pipeline` chains them and maintains a
`.partial` marker in the output directory: present while work is underway
or after a failure, removed on success.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clustering import ClusterModel, SelectKResult, assign_cluster, select_k
from .diary_ingest import (
    DAY_TYPES,
    DiaryFormatError,
    ActivityCodeMap,
    StateSequence,
    load_sequences_any,
    write_sequences,
)
from .household import HouseholdConfig, HouseholdError, build_household
from .markov_train import (
    ClusterDayModel,
    TrainError,
    estimate_all_statistics,
    load_model_dir,
    save_model_dir,
    train_cluster_day_model,
)
from .occupant_sim import SimCalendar, SimulationError
from .schedule_io import ScheduleError, assemble_schedule, load_bundle, load_reference_dir, write_schedule_file
from .validate import ComparisonReport, compare_behavior

EXIT_CONFIG = 2
EXIT_INGEST = 3
EXIT_CLUSTER = 4
EXIT_TRAIN = 5
EXIT_SIMULATE = 6
EXIT_VALIDATE = 7

_STAGE_CODES = {
    "config": EXIT_CONFIG,
    "ingest": EXIT_INGEST,
    "cluster": EXIT_CLUSTER,
    "train": EXIT_TRAIN,
    "simulate": EXIT_SIMULATE,
    "validate": EXIT_VALIDATE,
}


class StageError(Exception):
    """A pipeline stage failed; carries the stage's exit code."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.exit_code = _STAGE_CODES[stage]


def _entropy_seed() -> int:
    import secrets

    return secrets.randbits(32)


@dataclass
class ProjectConfig:
    diaries: Path
    bundle: Path
    reference: Path
    household: Path
    out: Path
    code_map: Path | None = None
    base_seed: int | None = None
    n_households: int = 1
    n_days: int = 365
    start_weekday: str = "monday"
    approach: int = 3
    k_range: tuple[int, int] = (3, 10)
    repeats: int = 10
    epsilon: float = 0.01
    silhouette_sample: int | None = None
    tpm_fallback: str = "absorbing"
    tpm_alpha: float = 0.0
    modulation: str = "present"
    unweighted_clustering: bool = False

    _REQUIRED = ("diaries", "bundle", "reference", "household", "out")

    @classmethod
    def read(cls, path: str | Path) -> "ProjectConfig":
        path = Path(path)
        if not path.exists():
            raise StageError("config", f"config file not found: {path}")
        base = path.parent
        raw: dict[str, str] = {}
        for ln, line in enumerate(path.read_text().splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise StageError("config", f"{path}: line {ln}: expected key = value")
            key, _, value = line.partition("=")
            raw[key.strip()] = value.strip()
        missing = [k for k in cls._REQUIRED if k not in raw]
        if missing:
            raise StageError("config", f"{path}: missing keys: {', '.join(missing)}")

        def as_path(key: str) -> Path:
            p = Path(raw[key])
            return p if p.is_absolute() else base / p

        cfg = cls(
            diaries=as_path("diaries"),
            bundle=as_path("bundle"),
            reference=as_path("reference"),
            household=as_path("household"),
            out=as_path("out"),
        )
        if "code_map" in raw:
            cfg.code_map = as_path("code_map")
        try:
            if "base_seed" in raw:
                cfg.base_seed = int(raw["base_seed"])
            if "n_households" in raw:
                cfg.n_households = int(raw["n_households"])
            if "n_days" in raw:
                cfg.n_days = int(raw["n_days"])
            if "start_weekday" in raw:
                cfg.start_weekday = raw["start_weekday"].lower()
            if "approach" in raw:
                cfg.approach = int(raw["approach"])
            if "k_range" in raw:
                lo, _, hi = raw["k_range"].partition(":")
                cfg.k_range = (int(lo), int(hi))
            if "repeats" in raw:
                cfg.repeats = int(raw["repeats"])
            if "epsilon" in raw:
                cfg.epsilon = float(raw["epsilon"])
            if "silhouette_sample" in raw:
                cfg.silhouette_sample = int(raw["silhouette_sample"])
            if "tpm_fallback" in raw:
                cfg.tpm_fallback = raw["tpm_fallback"]
            if "tpm_alpha" in raw:
                cfg.tpm_alpha = float(raw["tpm_alpha"])
            if "modulation" in raw:
                cfg.modulation = raw["modulation"]
            if "unweighted_clustering" in raw:
                cfg.unweighted_clustering = raw["unweighted_clustering"].lower() in ("1", "true", "yes")
        except ValueError as exc:
            raise StageError("config", f"{path}: {exc}") from exc
        if cfg.approach not in (1, 2, 3):
            raise StageError("config", f"approach must be 1, 2 or 3, got {cfg.approach}")
        if cfg.modulation not in ("present", "active"):
            raise StageError("config", f"modulation must be 'present' or 'active', got {cfg.modulation!r}")
        if cfg.k_range[0] < 1 or cfg.k_range[1] < cfg.k_range[0]:
            raise StageError("config", f"bad k_range {cfg.k_range}")
        if cfg.n_days < 1 or cfg.n_households < 1:
            raise StageError("config", "n_days and n_households must be positive")
        if cfg.tpm_fallback not in ("absorbing", "uniform", "laplace"):
            raise StageError("config", f"unknown tpm_fallback {cfg.tpm_fallback!r}")
        return cfg


def ingest_stage(
    diaries: Path, code_map: Path | None, out_file: Path, log=sys.stderr
) -> list[StateSequence]:
    """Parse diaries (minute- or step-resolution) and write the sequence table."""
    try:
        cmap = ActivityCodeMap.read(code_map) if code_map is not None else None
        sequences, unknown = load_sequences_any(diaries, cmap)
    except (OSError, DiaryFormatError) as exc:
        raise StageError("ingest", str(exc)) from exc
    if not sequences:
        raise StageError("ingest", f"{diaries}: no diary records")
    out_file.parent.mkdir(parents=True, exist_ok=True)
    write_sequences(out_file, sequences)
    if unknown:
        print(f"ingest: {unknown} minutes with unmapped codes sent to the default state", file=log)
    print(f"ingest: {len(sequences)} sequences -> {out_file}", file=log)
    return sequences


def cluster_stage(
    sequences: list[StateSequence],
    day_type: str,
    out_file: Path,
    k_range: tuple[int, int] = (3, 10),
    repeats: int = 10,
    base_seed: int = 0,
    epsilon: float = 0.01,
    silhouette_sample: int | None = None,
    use_weights: bool = True,
    log=sys.stderr,
) -> SelectKResult:
    """Select k on one day type's sequences and write the cluster model."""
    subset = [s for s in sequences if s.day_type == day_type]
    if not subset:
        raise StageError("cluster", f"no {day_type} sequences")
    try:
        result = select_k(
            subset,
            k_range=range(k_range[0], k_range[1] + 1),
            repeats=repeats,
            base_seed=base_seed,
            epsilon=epsilon,
            day_type=day_type,
            silhouette_sample=silhouette_sample,
            use_weights=use_weights,
        )
    except Exception as exc:
        raise StageError("cluster", f"{day_type}: {exc}") from exc
    out_file.parent.mkdir(parents=True, exist_ok=True)
    result.model.write(out_file)
    for row in result.table:
        marker = " *" if row.k == result.k_star else ""
        print(f"cluster[{day_type}]: k={row.k} mean silhouette {row.mean:.4f}{marker}", file=log)
    print(f"cluster[{day_type}]: chose k={result.k_star} -> {out_file}", file=log)
    return result


def train_stage(
    sequences: list[StateSequence],
    cluster_models: dict[str, ClusterModel],
    out_dir: Path,
    fallback: str = "absorbing",
    alpha: float = 0.0,
    log=sys.stderr,
) -> dict[str, dict[int, ClusterDayModel]]:
    """Assign sequences to clusters and fit per-(cluster, day-type) models."""
    models: dict[str, dict[int, ClusterDayModel]] = {}
    for day_type, cmodel in sorted(cluster_models.items()):
        subset = [s for s in sequences if s.day_type == day_type]
        if not subset:
            raise StageError("train", f"no {day_type} sequences")
        labels = assign_cluster(subset, cmodel)
        models[day_type] = {}
        for c in range(cmodel.k):
            members = [s for s, lab in zip(subset, labels) if lab == c]
            if not members:
                raise StageError("train", f"cluster {c} has no {day_type} sequences")
            try:
                models[day_type][c] = train_cluster_day_model(
                    members, cluster_id=c, day_type=day_type, fallback=fallback, alpha=alpha
                )
            except TrainError as exc:
                raise StageError("train", f"cluster {c} {day_type}: {exc}") from exc
            print(f"train: cluster {c} {day_type}: {len(members)} sequences", file=log)
    save_model_dir(out_dir, models)
    print(f"train: model files -> {out_dir}", file=log)
    return models


def _occupant_day_rows(results, calendar: SimCalendar) -> list[StateSequence]:
    rows: list[StateSequence] = []
    for res in results:
        n_days = res.states.shape[1] // 96
        for o in range(res.n_occupants):
            days = res.states[o].reshape(n_days, 96)
            for d in range(n_days):
                rows.append(
                    StateSequence(
                        f"h{res.index}o{o}", calendar.day_type(d), 1.0, days[d].astype(np.int8)
                    )
                )
    return rows


def simulate_stage(
    tpms_dir: Path,
    bundle_dir: Path,
    reference_dir: Path,
    household_conf: Path,
    out_dir: Path,
    n_households: int = 1,
    n_days: int = 365,
    start_weekday: str = "monday",
    base_seed: int = 0,
    approach: int = 3,
    modulation: str = "present",
    log=sys.stderr,
) -> None:
    """Generate household schedules and the occupant-day table."""
    try:
        models = load_model_dir(tpms_dir)
        bundle = load_bundle(bundle_dir)
        reference = load_reference_dir(reference_dir)
        config = HouseholdConfig.read(household_conf)
        calendar = SimCalendar.from_name(start_weekday, n_days)
    except (OSError, ValueError, KeyError, ScheduleError, HouseholdError, TrainError) as exc:
        raise StageError("simulate", str(exc)) from exc
    for day_type in DAY_TYPES:
        if day_type not in models or not models[day_type]:
            raise StageError("simulate", f"model directory has no {day_type} models")
        k = len(models[day_type])
        shares = config.shares_for(day_type)
        if len(shares) != k:
            raise StageError(
                "simulate",
                f"{day_type} cluster shares have {len(shares)} entries but model has {k} clusters",
            )
        if sorted(models[day_type]) != list(range(k)):
            raise StageError("simulate", f"{day_type} cluster ids are not 0..{k - 1}")
    out_dir.mkdir(parents=True, exist_ok=True)

    results = []
    for h in range(n_households):
        try:
            result = build_household(h, models, bundle, config, calendar, base_seed, approach=approach)
            schedule = assemble_schedule(result, reference, calendar, modulation=modulation)
        except (SimulationError, HouseholdError, ScheduleError, KeyError) as exc:
            raise StageError("simulate", f"household {h}: {exc}") from exc
        path = out_dir / f"household_{h}.csv"
        write_schedule_file(path, schedule)
        if result.placement_failures:
            print(f"simulate: household {h}: {result.placement_failures} placement failures", file=log)
        print(f"simulate: household {h} ({result.n_occupants} occupants) -> {path}", file=log)
        results.append(result)
    write_sequences(out_dir / "occupant_days.csv", _occupant_day_rows(results, calendar))
    print(f"simulate: occupant-day table -> {out_dir / 'occupant_days.csv'}", file=log)


def validate_stage(
    sim: Path,
    reference_diaries: Path,
    out_dir: Path,
    code_map: Path | None = None,
    log=sys.stderr,
) -> dict[str, ComparisonReport]:
    """Compare simulated occupant days against the reference corpus."""
    sim_path = sim / "occupant_days.csv" if sim.is_dir() else sim
    try:
        cmap = ActivityCodeMap.read(code_map) if code_map is not None else None
        sim_days, _ = load_sequences_any(sim_path, cmap)
        ref_days, _ = load_sequences_any(reference_diaries, cmap)
    except (OSError, DiaryFormatError) as exc:
        raise StageError("validate", str(exc)) from exc
    out_dir.mkdir(parents=True, exist_ok=True)
    reports: dict[str, ComparisonReport] = {}
    for day_type in DAY_TYPES:
        sim_dt = [s for s in sim_days if s.day_type == day_type]
        ref_dt = [s for s in ref_days if s.day_type == day_type]
        if not sim_dt or not ref_dt:
            print(f"validate: skipping {day_type} (no data on one side)", file=log)
            continue
        ref_stats = estimate_all_statistics(ref_dt)
        report = compare_behavior(sim_dt, ref_stats)
        path = out_dir / f"validation_report.{day_type.lower()}.csv"
        report.write(path)
        reports[day_type] = report
        print(f"validate[{day_type}]:", file=log)
        print(report.format_table(), file=sys.stdout)
    return reports


def run_pipeline(cfg: ProjectConfig, log=sys.stderr) -> int:
    """Run ingest, cluster, train, simulate, and validate end to end."""
    seed = cfg.base_seed
    if seed is None:
        seed = _entropy_seed()
        print(f"run: base_seed = {seed} (drawn from entropy)", file=log)
    cfg.out.mkdir(parents=True, exist_ok=True)
    marker = cfg.out / ".partial"
    marker.touch()
    sequences = ingest_stage(cfg.diaries, cfg.code_map, cfg.out / "sequences.csv", log=log)
    cluster_models: dict[str, ClusterModel] = {}
    for day_type in DAY_TYPES:
        result = cluster_stage(
            sequences,
            day_type,
            cfg.out / f"model.{day_type.lower()}.clusters",
            k_range=cfg.k_range,
            repeats=cfg.repeats,
            base_seed=seed,
            epsilon=cfg.epsilon,
            silhouette_sample=cfg.silhouette_sample,
            use_weights=not cfg.unweighted_clustering,
            log=log,
        )
        cluster_models[day_type] = result.model
    train_stage(
        sequences, cluster_models, cfg.out / "tpms", fallback=cfg.tpm_fallback, alpha=cfg.tpm_alpha, log=log
    )
    simulate_stage(
        cfg.out / "tpms",
        cfg.bundle,
        cfg.reference,
        cfg.household,
        cfg.out,
        n_households=cfg.n_households,
        n_days=cfg.n_days,
        start_weekday=cfg.start_weekday,
        base_seed=seed,
        approach=cfg.approach,
        modulation=cfg.modulation,
        log=log,
    )
    validate_stage(cfg.out, cfg.diaries, cfg.out, code_map=cfg.code_map, log=log)
    marker.unlink()
    print("run: done", file=log)
    return 0
