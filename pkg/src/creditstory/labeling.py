"""Target construction, run-date splits and positive-class oversampling."""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .bureau import CustomerFile, Trade, month_index
from .rng import substream
from .story import DEFAULT_RULES, RuleTable, render_customer
from .temporal import temporal_vector

WINDOW_MONTHS = 18
DEFAULT_CUTOFF = dt.date(2018, 2, 1)
PARTITIONS = ("train", "validation", "holdout", "oot")


class EmptyInTimePool(ValueError):
    pass


class NoPositives(ValueError):
    pass


def outcome_flags(cf: CustomerFile) -> Optional[tuple[int, int]]:
    """(charge-off, delinquency) indicators over the 18-month window, or None.

    The window holds performance months strictly after the run month and at
    most 18 months later. Delinquency (90+ days) only counts if no charge-off
    was reported in an earlier month of the window.
    """
    if not any(isinstance(r, Trade) and r.type == "CC" for r in cf.records):
        return None
    t0 = month_index(cf.run_date)
    window = sorted(
        (p for p in cf.performance if t0 < month_index(p.month) <= t0 + WINDOW_MONTHS),
        key=lambda p: p.month,
    )
    if len({p.month for p in window}) < WINDOW_MONTHS:
        return None
    charge_off = 0
    delinquent = 0
    first_co = None
    for p in window:
        if p.chargeoff_flag == "Y":
            charge_off = 1
            if first_co is None:
                first_co = p.month
    for p in window:
        if p.dpd_bucket == "3" and (first_co is None or p.month <= first_co):
            delinquent = 1
            break
    return charge_off, delinquent


def label_customer(cf: CustomerFile) -> Optional[int]:
    flags = outcome_flags(cf)
    if flags is None:
        return None
    return int(flags[0] or flags[1])


@dataclass
class LabeledExample:
    customer_id: str
    stories: dict
    temporal: np.ndarray
    label: Optional[int]
    run_date: dt.date
    segment_sizes: dict = field(default_factory=dict)


def build_example(cf: CustomerFile, rules: RuleTable = DEFAULT_RULES) -> LabeledExample:
    stories = render_customer(cf, rules)
    sizes = {s: len(cf.entries(s)) for s in stories}
    return LabeledExample(
        customer_id=cf.customer_id,
        stories={s: st.text for s, st in stories.items()},
        temporal=temporal_vector(cf),
        label=label_customer(cf),
        run_date=cf.run_date,
        segment_sizes=sizes,
    )


# --------------------------------------------------------------------------
# splits


@dataclass(frozen=True)
class SplitSpec:
    cutoff: dt.date = DEFAULT_CUTOFF
    fractions: tuple = (0.6, 0.2, 0.2)
    seed: int = 0

    def __post_init__(self):
        if len(self.fractions) != 3 or abs(sum(self.fractions) - 1.0) > 1e-12:
            raise ValueError(f"fractions must be three shares summing to 1, got {self.fractions}")


def hash_unit(customer_id: str, seed: int) -> float:
    """Deterministic uniform draw in [0, 1) from (seed, customer_id)."""
    digest = hashlib.sha256(f"{seed}:{customer_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big") / 2.0**64


def assign_partition(customer_id: str, run_date: dt.date, spec: SplitSpec) -> str:
    if run_date > spec.cutoff:
        return "oot"
    u = hash_unit(customer_id, spec.seed)
    f_train, f_val, _ = spec.fractions
    if u < f_train:
        return "train"
    if u < f_train + f_val:
        return "validation"
    return "holdout"


def split(dataset: Sequence, spec: SplitSpec) -> dict[str, list]:
    """Partition items (anything with ``customer_id`` and ``run_date``) by cutoff and hash."""
    parts = {name: [] for name in PARTITIONS}
    for item in dataset:
        parts[assign_partition(item.customer_id, item.run_date, spec)].append(item)
    if not (parts["train"] or parts["validation"] or parts["holdout"]):
        raise EmptyInTimePool(f"no records with run date on or before {spec.cutoff}")
    return parts


def oversample(train: Sequence, target_share: Optional[float], seed: int = 0) -> list:
    """Duplicate positives round-robin until they make up ``target_share`` of the partition.

    Uses the fewest duplicates that reach the share. Negatives are untouched.
    """
    train = list(train)
    if target_share is None:
        return train
    positives = [ex for ex in train if ex.label == 1]
    if not positives:
        raise NoPositives("training partition has no positive examples")
    n_pos = len(positives)
    n_neg = sum(1 for ex in train if ex.label == 0)
    # smallest P with P / (P + n_neg) >= share, in exact arithmetic
    share = Fraction(str(target_share))
    needed = math.ceil(share * n_neg / (1 - share))
    if n_pos >= needed:
        return train
    order = substream(seed, "oversample").permutation(n_pos)
    extra = [positives[order[i % n_pos]] for i in range(needed - n_pos)]
    return train + extra


# --------------------------------------------------------------------------
# manifest


def build_manifest(parts: dict[str, list], spec: SplitSpec, labels: Optional[dict] = None) -> dict:
    manifest = {
        "seed": spec.seed,
        "cutoff": spec.cutoff.isoformat(),
        "fractions": list(spec.fractions),
        "partitions": {name: sorted(item.customer_id for item in parts[name]) for name in PARTITIONS},
    }
    if labels is not None:
        rates = {}
        for name in PARTITIONS:
            ys = [labels[item.customer_id] for item in parts[name]]
            ys = [y for y in ys if y is not None]
            rates[name] = {"n_labeled": len(ys), "event_rate": float(np.mean(ys)) if ys else None,
                           "n_none": len(parts[name]) - len(ys)}
        all_y = [y for y in labels.values() if y is not None]
        manifest["labeled_event_rate"] = float(np.mean(all_y)) if all_y else None
        manifest["partition_stats"] = rates
    return manifest


def write_manifest(manifest: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
