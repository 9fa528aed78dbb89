"""Day offsets from the run date, aggregated per segment into (min, max, mean)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bureau import SEGMENT_TYPES, CustomerFile

# Stand-in triple for a segment without records: roughly ten years back.
EMPTY_SENTINEL = -3650.0
STD_FLOOR = 1e-8

FEATURE_NAMES = tuple(f"{s.lower()}_{stat}_dt" for s in SEGMENT_TYPES for stat in ("min", "max", "avg"))


class EmptyTrainingSet(ValueError):
    pass


def compute_deltas(cf: CustomerFile) -> dict[str, list[int]]:
    """Signed day offsets (date - run_date) for every TR/IN/CL record."""
    out = {s: [] for s in SEGMENT_TYPES}
    for rec in cf.records:
        if rec.segment is not None:
            out[rec.segment].append((rec.date - cf.run_date).days)
    return out


def aggregate(deltas: dict[str, list[int]]) -> np.ndarray:
    """Concatenate per-segment (min, max, mean) in TR, IN, CL order -> shape (9,)."""
    vec = np.empty(3 * len(SEGMENT_TYPES))
    for k, s in enumerate(SEGMENT_TYPES):
        values = deltas.get(s, ())
        if len(values):
            # integer sum is exact, so the mean does not depend on entry order
            vec[3 * k:3 * k + 3] = (min(values), max(values), sum(values) / len(values))
        else:
            vec[3 * k:3 * k + 3] = EMPTY_SENTINEL
    return vec


def temporal_vector(cf: CustomerFile) -> np.ndarray:
    return aggregate(compute_deltas(cf))


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, v: np.ndarray) -> np.ndarray:
        return (np.asarray(v, dtype=float) - self.mean) / self.std

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["std"], dtype=float))


def fit_standardizer(vectors) -> Standardizer:
    x = np.asarray(vectors, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise EmptyTrainingSet("need at least two training vectors")
    return Standardizer(x.mean(axis=0), np.maximum(x.std(axis=0), STD_FLOOR))


def apply(std: Standardizer, v) -> np.ndarray:
    return std.apply(v)
