"""Time-use diary ingestion.

Raw diaries carry one activity code per minute over a 24-hour day that
starts at 4:00 a.m. (1440 minutes).  Ingestion maps raw codes onto the
canonical activity alphabet, resamples each diary to 96 fifteen-minute
steps by majority vote, and optionally projects the result onto the
3-state presence alphabet used for clustering.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

N_MINUTES = 1440
N_STEPS = 96
STEP_MINUTES = 15
DAY_TYPES = ("WD", "WE")


class ActivityState(enum.IntEnum):
    """Canonical activity alphabet; values index transition-matrix rows."""

    SLEEP = 0
    AWAY = 1
    HOME_ACTIVE = 2
    COOKING = 3
    DISHWASHING = 4
    LAUNDRY = 5
    PERSONAL_HYGIENE = 6


STATE_TOKENS = {
    ActivityState.SLEEP: "Sleep",
    ActivityState.AWAY: "Away",
    ActivityState.HOME_ACTIVE: "HomeActive",
    ActivityState.COOKING: "Cooking",
    ActivityState.DISHWASHING: "Dishwashing",
    ActivityState.LAUNDRY: "Laundry",
    ActivityState.PERSONAL_HYGIENE: "PersonalHygiene",
}
STATE_BY_TOKEN = {tok: st for st, tok in STATE_TOKENS.items()}

FULL_ALPHABET = tuple(ActivityState)
PRESENCE_ALPHABET = (ActivityState.SLEEP, ActivityState.AWAY, ActivityState.HOME_ACTIVE)
# Activities simulated as discrete events with sampled durations.
EVENT_ACTIVITIES = (
    ActivityState.COOKING,
    ActivityState.DISHWASHING,
    ActivityState.LAUNDRY,
    ActivityState.PERSONAL_HYGIENE,
)


class DiaryFormatError(ValueError):
    """Malformed diary, code map, or sequence file."""


def _check_day_type(day_type: str) -> str:
    if day_type not in DAY_TYPES:
        raise DiaryFormatError(f"day_type must be one of {DAY_TYPES}, got {day_type!r}")
    return day_type


@dataclass(frozen=True)
class ActivityCodeMap:
    """Mapping from raw diary codes to canonical states.

    Unknown codes fall back to `default_state`; callers receive a tally of
    how often that happened.
    """

    mapping: dict[str, ActivityState]
    default_state: ActivityState = ActivityState.HOME_ACTIVE

    @classmethod
    def identity(cls) -> "ActivityCodeMap":
        """Map canonical tokens onto themselves."""
        return cls(dict(STATE_BY_TOKEN), ActivityState.HOME_ACTIVE)

    @classmethod
    def read(cls, path: str | Path) -> "ActivityCodeMap":
        mapping: dict[str, ActivityState] = {}
        default = None
        for i, line in enumerate(Path(path).read_text().splitlines()):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                code, token = line.split(",")
            except ValueError:
                raise DiaryFormatError(f"{path}: line {i + 1}: expected raw_code,canonical_state")
            if token not in STATE_BY_TOKEN:
                raise DiaryFormatError(f"{path}: line {i + 1}: unknown state token {token!r}")
            if code == "DEFAULT":
                default = STATE_BY_TOKEN[token]
            else:
                mapping[code] = STATE_BY_TOKEN[token]
        if default is None:
            raise DiaryFormatError(f"{path}: missing DEFAULT,<state> line")
        return cls(mapping, default)

    def write(self, path: str | Path) -> None:
        lines = [f"{code},{STATE_TOKENS[state]}" for code, state in self.mapping.items()]
        lines.append(f"DEFAULT,{STATE_TOKENS[self.default_state]}")
        Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class RawDiary:
    """One respondent-day at minute resolution.

    `minutes` holds canonical states (mapped at parse time so downstream
    stages never see raw codes).
    """

    respondent_id: str
    day_type: str
    weight: float
    minutes: np.ndarray  # (1440,) int8 canonical states

    def __post_init__(self) -> None:
        _check_day_type(self.day_type)
        self.minutes = np.asarray(self.minutes, dtype=np.int8)
        if self.minutes.shape != (N_MINUTES,):
            raise DiaryFormatError(
                f"diary {self.respondent_id}: expected {N_MINUTES} minutes, got {self.minutes.shape}"
            )
        if self.weight < 0 or not np.isfinite(self.weight):
            raise DiaryFormatError(f"diary {self.respondent_id}: bad weight {self.weight}")


@dataclass
class StateSequence:
    """One respondent-day resampled to 96 fifteen-minute steps."""

    respondent_id: str
    day_type: str
    weight: float
    states: np.ndarray  # (96,) int8

    def __post_init__(self) -> None:
        _check_day_type(self.day_type)
        self.states = np.asarray(self.states, dtype=np.int8)
        if self.states.shape != (N_STEPS,):
            raise DiaryFormatError(
                f"sequence {self.respondent_id}: expected {N_STEPS} steps, got {self.states.shape}"
            )


@dataclass
class ParseResult:
    diaries: list[RawDiary] = field(default_factory=list)
    unknown_codes: int = 0


def parse_diaries(path: str | Path, code_map: ActivityCodeMap) -> ParseResult:
    """Parse a diary CSV: header, then respondent_id,day_type,weight,<1440 codes>.

    Raises DiaryFormatError naming the offending data row on malformed
    records; unknown codes map to the code map's default state and are
    tallied in the result.
    """
    path = Path(path)
    lut = {code: int(state) for code, state in code_map.mapping.items()}
    default = int(code_map.default_state)
    result = ParseResult()
    with path.open() as fh:
        header = fh.readline()
        if not header:
            raise DiaryFormatError(f"{path}: empty file")
        for row, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 3 + N_MINUTES:
                raise DiaryFormatError(
                    f"{path}: row {row}: expected {3 + N_MINUTES} fields, got {len(fields)}"
                )
            rid, day_type, weight_s = fields[0], fields[1], fields[2]
            if day_type not in DAY_TYPES:
                raise DiaryFormatError(f"{path}: row {row}: bad day_type {day_type!r}")
            try:
                weight = float(weight_s)
            except ValueError:
                raise DiaryFormatError(f"{path}: row {row}: bad weight {weight_s!r}")
            if weight < 0 or not np.isfinite(weight):
                raise DiaryFormatError(f"{path}: row {row}: bad weight {weight}")
            states = np.empty(N_MINUTES, dtype=np.int8)
            unknown = 0
            for i, code in enumerate(fields[3:]):
                mapped = lut.get(code)
                if mapped is None:
                    mapped = default
                    unknown += 1
                states[i] = mapped
            result.unknown_codes += unknown
            result.diaries.append(RawDiary(rid, day_type, weight, states))
    return result


def resample_to_sequence(diary: RawDiary) -> StateSequence:
    """Collapse 1440 minutes to 96 steps by per-window majority vote.

    Ties go to the state that occurs earliest within the window.
    """
    windows = diary.minutes.reshape(N_STEPS, STEP_MINUTES)
    n_states = len(FULL_ALPHABET)
    counts = np.zeros((N_STEPS, n_states), dtype=np.int16)
    rows = np.repeat(np.arange(N_STEPS), STEP_MINUTES)
    np.add.at(counts, (rows, windows.ravel()), 1)
    firsts = np.full((N_STEPS, n_states), STEP_MINUTES, dtype=np.int16)
    offsets = np.tile(np.arange(STEP_MINUTES, dtype=np.int16), N_STEPS)
    np.minimum.at(firsts, (rows, windows.ravel()), offsets)
    best = counts.max(axis=1)
    # Among states tied at the maximum count, earliest first occurrence wins.
    rank = np.where(counts == best[:, None], firsts, STEP_MINUTES + 1)
    states = rank.argmin(axis=1).astype(np.int8)
    return StateSequence(diary.respondent_id, diary.day_type, diary.weight, states)


def project_to_presence(seq: StateSequence) -> StateSequence:
    """Project onto {Sleep, Away, HomeActive}; event activities imply HomeActive."""
    projected = np.minimum(seq.states, np.int8(ActivityState.HOME_ACTIVE))
    return StateSequence(seq.respondent_id, seq.day_type, seq.weight, projected)


def ingest(path: str | Path, code_map: ActivityCodeMap) -> tuple[list[StateSequence], int]:
    """Parse and resample a diary file in one pass."""
    parsed = parse_diaries(path, code_map)
    return [resample_to_sequence(d) for d in parsed.diaries], parsed.unknown_codes


# -- resampled-sequence artifact -------------------------------------------

_SEQ_HEADER = "respondent_id,day_type,weight," + ",".join(f"s{i:02d}" for i in range(N_STEPS))


def write_sequences(path: str | Path, sequences: list[StateSequence]) -> None:
    lines = [_SEQ_HEADER]
    for seq in sequences:
        tokens = ",".join(STATE_TOKENS[ActivityState(int(s))] for s in seq.states)
        # repr round-trips the float exactly
        lines.append(f"{seq.respondent_id},{seq.day_type},{seq.weight!r},{tokens}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_sequences(path: str | Path) -> list[StateSequence]:
    path = Path(path)
    out: list[StateSequence] = []
    with path.open() as fh:
        fh.readline()
        for row, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 3 + N_STEPS:
                raise DiaryFormatError(
                    f"{path}: row {row}: expected {3 + N_STEPS} fields, got {len(fields)}"
                )
            try:
                states = np.array([int(STATE_BY_TOKEN[t]) for t in fields[3:]], dtype=np.int8)
            except KeyError as exc:
                raise DiaryFormatError(f"{path}: row {row}: unknown state token {exc.args[0]!r}")
            out.append(StateSequence(fields[0], fields[1], float(fields[2]), states))
    return out


def load_sequences_any(
    path: str | Path, code_map: ActivityCodeMap | None = None
) -> tuple[list[StateSequence], int]:
    """Load either a resampled-sequence file or a raw diary file.

    The two formats are distinguished by field count.  Raw diaries are
    ingested with `code_map` (canonical-token identity map when omitted).
    Returns (sequences, unknown_code_tally); the tally is zero for
    already-resampled input.
    """
    path = Path(path)
    with path.open() as fh:
        fh.readline()
        first = fh.readline()
    n_fields = len(first.rstrip("\n").split(",")) if first.strip() else 0
    if n_fields == 3 + N_STEPS:
        return read_sequences(path), 0
    if n_fields == 3 + N_MINUTES:
        return ingest(path, code_map or ActivityCodeMap.identity())
    raise DiaryFormatError(
        f"{path}: unrecognized record width {n_fields}; expected "
        f"{3 + N_STEPS} (sequences) or {3 + N_MINUTES} (raw diaries)"
    )


def sequence_matrix(sequences: list[StateSequence]) -> tuple[np.ndarray, np.ndarray]:
    """Stack sequences into an (n, 96) state matrix plus a weight vector."""
    if not sequences:
        raise ValueError("no sequences")
    X = np.stack([s.states for s in sequences])
    w = np.array([s.weight for s in sequences], dtype=np.float64)
    return X, w
