"""Weighted empirical distributions with inverse-CDF sampling."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PROB_TOL = 1e-9


@dataclass
class EmpiricalDistribution:
    """Discrete distribution over a strictly increasing support.

    Probabilities must sum to one within 1e-9 at construction; the stored
    vector is renormalized exactly so serialization round trips stay
    consistent.
    """

    support: np.ndarray
    probs: np.ndarray
    unit: str = ""
    _cum: list[float] = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.support = np.asarray(self.support, dtype=np.float64)
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.support.ndim != 1 or self.support.size == 0:
            raise ValueError("support must be a nonempty 1-d array")
        if self.support.shape != self.probs.shape:
            raise ValueError("support and probs must align")
        if np.any(np.diff(self.support) <= 0):
            raise ValueError("support must be strictly increasing with no duplicates")
        if np.any(self.probs < 0):
            raise ValueError("probabilities must be nonnegative")
        total = float(self.probs.sum())
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {total}, not 1")
        self.probs = self.probs / total
        self._cum = np.cumsum(self.probs).tolist()

    @classmethod
    def from_weights(
        cls, values: np.ndarray, weights: np.ndarray | None = None, unit: str = ""
    ) -> "EmpiricalDistribution":
        """Aggregate (possibly repeated) weighted samples into a distribution."""
        values = np.asarray(values, dtype=np.float64)
        if values.size == 0:
            raise ValueError("no samples")
        if weights is None:
            weights = np.ones_like(values)
        weights = np.asarray(weights, dtype=np.float64)
        support, inverse = np.unique(values, return_inverse=True)
        mass = np.bincount(inverse, weights=weights, minlength=support.size)
        total = mass.sum()
        if total <= 0:
            raise ValueError("total weight must be positive")
        return cls(support, mass / total, unit)

    def sample(self, rng: np.random.Generator) -> float:
        """Inverse-CDF draw."""
        r = rng.random()
        idx = bisect.bisect_right(self._cum, r)
        if idx >= len(self._cum):
            idx = len(self._cum) - 1
        return float(self.support[idx])

    def sample_int(self, rng: np.random.Generator) -> int:
        return int(round(self.sample(rng)))

    def cdf_at(self, points: np.ndarray) -> np.ndarray:
        """Right-continuous CDF evaluated at `points`."""
        points = np.asarray(points, dtype=np.float64)
        idx = np.searchsorted(self.support, points, side="right")
        cum = np.concatenate([[0.0], np.cumsum(self.probs)])
        return cum[idx]

    def mean(self) -> float:
        return float(self.support @ self.probs)

    def write(self, path: str | Path) -> None:
        lines = [f"unit,{self.unit}"]
        lines += [f"{v:.12g},{p:.12g}" for v, p in zip(self.support, self.probs)]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def read(cls, path: str | Path) -> "EmpiricalDistribution":
        path = Path(path)
        lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("unit,"):
            raise ValueError(f"{path}: missing unit header")
        unit = lines[0].split(",", 1)[1]
        values, probs = [], []
        for ln in lines[1:]:
            v, p = ln.split(",")
            values.append(float(v))
            probs.append(float(p))
        return cls(np.array(values), np.array(probs), unit)


def point_mass(value: float, unit: str = "") -> EmpiricalDistribution:
    return EmpiricalDistribution(np.array([value]), np.array([1.0]), unit)
