"""
Seeded synthetic bureau corpora with a planted, known risk signal.

Each customer gets a latent feature vector ``x``; the default probability is
``r = logistic(b0 + beta . x)`` and the label is drawn from Bernoulli(r).
Records are then rendered so that ``x`` is recoverable from the file (up to
what the story/temporal features can see), and performance lines are
written to agree with the drawn label.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime as dt
import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bureau import (
    TRADE_TYPES,
    Collection,
    CustomerFile,
    Inquiry,
    Performance,
    Trade,
    add_months,
    month_index,
    serialize_customer,
)
from .metrics import DegenerateLabels, auc
from .rng import substream

FEATURES = (
    "open_collection",
    "inquiries_6m",
    "worst_status",
    "utilization",
    "max_lateness",
    "years_oldest_trade",
    "inquiry_recency",
    "collection_recency",
)

SCENARIO_BETAS = {
    "default": {
        "open_collection": 0.8,
        "inquiries_6m": 0.15,
        "worst_status": 0.4,
        "utilization": 0.3,
        "max_lateness": 0.35,
        "years_oldest_trade": -0.12,
        "inquiry_recency": 2.2,
        "collection_recency": 1.6,
    },
    "temporal-heavy": {
        "open_collection": 0.5,
        "inquiries_6m": 0.1,
        "worst_status": 0.25,
        "utilization": 0.3,
        "max_lateness": 0.25,
        "years_oldest_trade": -0.08,
        "inquiry_recency": 3.0,
        "collection_recency": 2.5,
    },
}

INQUIRERS = ("RBCBNK", "TDBANK", "SCOTIA", "BMOFIN", "CIBCCR", "DSJRDN", "NATBNK", "CAPONE")
AGENCIES = ("CBVCOL", "EOSCCA", "TCMCOL", "ABCCOL", "METCRD")
WORST_STATUS_CODES = ("01", "02", "03", "04", "05")
DAYS_PER_MONTH = 30.44


class ConfigInvalid(ValueError):
    pass


class NoConvergence(RuntimeError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    n_customers: int = 20000
    event_rate: float = 0.04
    none_fraction: float = 0.02
    cutoff: dt.date = dt.date(2018, 2, 1)
    in_time_start: dt.date = dt.date(2016, 9, 1)
    oot_end: dt.date = dt.date(2018, 8, 31)
    oot_share: float = 0.2
    oot_multiplier: float = 0.9
    scenario: str = "default"
    beta: Optional[dict] = None
    intercept: Optional[float] = None
    shard_size: int = 2000
    seed: int = 42

    def __post_init__(self):
        if self.scenario not in SCENARIO_BETAS:
            raise ConfigInvalid(f"unknown scenario {self.scenario!r}")
        if not 0.0 < self.event_rate <= 0.05:
            raise ConfigInvalid(f"event_rate must be in (0, 0.05], got {self.event_rate}")
        if self.n_customers < 1:
            raise ConfigInvalid("n_customers must be positive")
        if not 0.0 <= self.none_fraction < 1.0 or not 0.0 <= self.oot_share < 1.0:
            raise ConfigInvalid("none_fraction and oot_share must be in [0, 1)")
        if not 0.0 < self.oot_multiplier <= 1.0:
            raise ConfigInvalid("oot_multiplier must be in (0, 1]")
        if not self.in_time_start <= self.cutoff < self.oot_end:
            raise ConfigInvalid("need in_time_start <= cutoff < oot_end")
        if self.beta is not None and set(self.beta) - set(FEATURES):
            raise ConfigInvalid(f"unknown beta keys {sorted(set(self.beta) - set(FEATURES))}")

    @property
    def beta_vector(self) -> np.ndarray:
        beta = dict(SCENARIO_BETAS[self.scenario])
        if self.beta is not None:
            beta.update(self.beta)
        return np.array([beta[f] for f in FEATURES], dtype=float)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for k in ("cutoff", "in_time_start", "oot_end"):
            d[k] = d[k].isoformat()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        d = dict(d)
        unknown = set(d) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ConfigInvalid(f"unknown config keys {sorted(unknown)}")
        for k in ("cutoff", "in_time_start", "oot_end"):
            if k in d and isinstance(d[k], str):
                d[k] = dt.date.fromisoformat(d[k])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigInvalid(str(exc)) from None


@dataclass
class GroundTruth:
    customer_id: list
    risk: np.ndarray
    label: list
    features: np.ndarray
    oot: np.ndarray
    intercept: float = 0.0

    def labeled_mask(self) -> np.ndarray:
        return np.array([y is not None for y in self.label])

    def subset(self, ids) -> "GroundTruth":
        pos = {c: i for i, c in enumerate(self.customer_id)}
        idx = np.array([pos[c] for c in ids], dtype=int)
        return GroundTruth([self.customer_id[i] for i in idx], self.risk[idx],
                           [self.label[i] for i in idx], self.features[idx], self.oot[idx],
                           self.intercept)


def logistic(z):
    return 1.0 / (1.0 + np.exp(-z))


# --------------------------------------------------------------------------
# latent features


def sample_latents(rng: np.random.Generator, n: int) -> dict:
    """Draw latent customer attributes; ``features`` (n x 8) drives the risk."""
    n_trades = 1 + rng.poisson(1.8, n)
    months_oldest = np.minimum(6 + np.floor(rng.gamma(2.0, 40.0, n)), 360).astype(int)
    worst = rng.choice(6, size=n, p=[0.72, 0.12, 0.07, 0.04, 0.03, 0.02])
    hist_late = rng.choice(4, size=n, p=[0.60, 0.22, 0.12, 0.06])
    max_late = np.maximum(hist_late, np.minimum(worst, 3))
    utilization = 1.1 * rng.beta(1.6, 2.4, n)

    inq_recent = rng.poisson(0.7, n)
    inq_old = rng.poisson(1.0, n)
    u = rng.random(n)
    with np.errstate(divide="ignore"):
        recent_min = np.floor(183 * (1 - u ** (1.0 / np.maximum(inq_recent, 1)))).astype(int)
        old_min = 183 + np.floor(548 * (1 - u ** (1.0 / np.maximum(inq_old, 1)))).astype(int)
    last_inq_days = np.where(inq_recent > 0, recent_min, np.where(inq_old > 0, old_min, -1))
    # linear ramps: 1 on the run date, 0 at the horizon or with no record
    inquiry_recency = np.where(last_inq_days >= 0, np.maximum(0.0, 1.0 - last_inq_days / 730.0), 0.0)

    open_coll = (rng.random(n) < 0.07).astype(int)
    closed_coll = (rng.random(n) < 0.08).astype(int)
    open_days = rng.integers(15, 1800, n)
    closed_days = rng.integers(15, 1800, n)
    coll_days = np.where(open_coll > 0, open_days, 10**6)
    coll_days = np.minimum(coll_days, np.where(closed_coll > 0, closed_days, 10**6))
    collection_recency = np.maximum(0.0, 1.0 - coll_days / 1825.0)

    features = np.column_stack([
        open_coll,
        inq_recent,
        worst,
        utilization,
        max_late,
        months_oldest / 12.0,
        inquiry_recency,
        collection_recency,
    ]).astype(float)
    return {
        "features": features,
        "n_trades": n_trades,
        "months_oldest": months_oldest,
        "worst": worst,
        "max_late": max_late,
        "utilization": utilization,
        "inq_recent": inq_recent,
        "inq_old": inq_old,
        "last_inq_days": last_inq_days,
        "open_coll": open_coll,
        "closed_coll": closed_coll,
        "open_days": open_days,
        "closed_days": closed_days,
    }


def calibrate_intercept(cfg: GeneratorConfig, n_draws: int = 100_000, tol: float = 0.002,
                        max_iter: int = 100, target: Optional[float] = None) -> float:
    """Bisection on the intercept so the Monte-Carlo mean risk hits the event rate.

    ``target`` overrides ``cfg.event_rate`` (used to probe the calibration
    outside the generator's imbalance regime).
    """
    target = cfg.event_rate if target is None else target
    x = sample_latents(substream(cfg.seed, "calibrate"), n_draws)["features"]
    z = x @ cfg.beta_vector
    lo, hi = -30.0, 30.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        mean_r = logistic(mid + z).mean()
        # tighter than tol so the realized rate is centred, well inside the band
        if abs(mean_r - target) <= min(tol, 1e-6):
            return mid
        if mean_r < target:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    if abs(logistic(mid + z).mean() - target) <= tol:
        return mid
    raise NoConvergence(f"intercept bisection did not reach {target} +/- {tol}")


# --------------------------------------------------------------------------
# rendering one customer


def _customer_id(seed: int, i: int) -> str:
    return hashlib.sha256(f"lnb:{seed}:{i}".encode()).hexdigest()[:12].upper()


def _account_id(rng) -> str:
    return "A" + "".join(str(d) for d in rng.integers(0, 10, 17))


def _random_day(rng, start: dt.date, end: dt.date) -> dt.date:
    return start + dt.timedelta(days=int(rng.integers(0, (end - start).days + 1)))


def _render_trades(rng, lat: dict, run_date: dt.date, no_cc: bool) -> list:
    n = int(lat["n_trades"])
    oldest_days = int(round(lat["months_oldest"] * DAYS_PER_MONTH))
    ages = [oldest_days] + sorted((int(d) for d in rng.integers(30, oldest_days + 1, n - 1)), reverse=True)
    other_types = [t for t in TRADE_TYPES if t != "CC"]
    types = []
    for k in range(n):
        if k == 0 and not no_cc:
            types.append("CC")
        else:
            pool = other_types if no_cc else TRADE_TYPES
            types.append(str(rng.choice(pool)))

    worst = int(lat["worst"])
    worst_idx = int(rng.integers(n))
    statuses = []
    for k in range(n):
        if k == worst_idx:
            statuses.append(str(rng.choice(["07", "08"])) if worst == 5 else WORST_STATUS_CODES[worst])
        else:
            statuses.append("09" if rng.random() < 0.2 else "01")

    open_dates = [run_date - dt.timedelta(days=a) for a in ages]
    age_months = [max(1, min(24, month_index(run_date) - month_index(d))) for d in open_dates]
    histories = [["0"] * m + ["X"] * (24 - m) for m in age_months]
    if worst > 0:
        histories[worst_idx][0] = str(min(worst, 3))
    max_late = int(lat["max_late"])
    if max_late > 0:
        k = int(rng.integers(n))
        pos = int(rng.integers(age_months[k]))
        histories[k][pos] = str(max(int(histories[k][pos]), max_late))

    trades = []
    for k in range(n):
        if types[k] in ("CC", "LC"):
            limit = int(rng.integers(5, 200)) * 10_000
            balance = int(round(lat["utilization"] * limit))
        else:
            limit = int(rng.integers(50, 5000)) * 10_000
            balance = int(round(limit * rng.uniform(0.05, 0.95)))
        if statuses[k] == "09":
            balance = 0
        trades.append(Trade(_account_id(rng), types[k], open_dates[k], statuses[k],
                            balance, limit, "".join(histories[k])))
    return trades


def _render_inquiries(rng, lat: dict, run_date: dt.date) -> list:
    k_recent, k_old = int(lat["inq_recent"]), int(lat["inq_old"])
    last = int(lat["last_inq_days"])
    days = []
    if k_recent:
        days = [last] + [int(d) for d in rng.integers(last, 183, k_recent - 1)]
        days += [int(d) for d in rng.integers(183, 731, k_old)]
    elif k_old:
        days = [last] + [int(d) for d in rng.integers(last, 731, k_old - 1)]
    purposes = rng.choice(TRADE_TYPES, size=len(days), p=[0.45, 0.15, 0.1, 0.15, 0.1, 0.05])
    lenders = rng.choice(INQUIRERS, size=len(days))
    out = [Inquiry(str(lenders[j]), run_date - dt.timedelta(days=d), str(purposes[j]))
           for j, d in enumerate(days)]
    return sorted(out, key=lambda r: r.inquiry_date)


def _render_collections(rng, lat: dict, run_date: dt.date) -> list:
    out = []
    if lat["open_coll"]:
        out.append(Collection(str(rng.choice(AGENCIES)), run_date - dt.timedelta(days=int(lat["open_days"])),
                              int(rng.integers(50, 5000)) * 100, "O"))
    if lat["closed_coll"]:
        status = "P" if rng.random() < 0.8 else "D"
        out.append(Collection(str(rng.choice(AGENCIES)), run_date - dt.timedelta(days=int(lat["closed_days"])),
                              int(rng.integers(50, 5000)) * 100, status))
    return sorted(out, key=lambda r: r.assign_date)


def _render_performance(rng, run_date: dt.date, label: int, n_months: int = 18) -> list:
    dpd = ["0"] * 18
    flag = ["N"] * 18
    if label:
        k = int(rng.integers(18))
        if rng.random() < 0.35:
            for j in range(max(0, k - 3), k):
                dpd[j] = str(min(3, j - (k - 3) + 1)) if rng.random() < 0.5 else "0"
            for j in range(k, 18):
                dpd[j], flag[j] = "3", "Y"
        else:
            for j, b in zip(range(k - 2, k + 1), "123"):
                if j >= 0:
                    dpd[j] = b
            for j in range(k + 1, 18):
                dpd[j] = "3" if rng.random() < 0.5 else str(rng.choice(["0", "1", "2"]))
    else:
        draws = rng.random(18)
        for j in range(18):
            dpd[j] = "0" if draws[j] < 0.93 else ("1" if draws[j] < 0.98 else "2")
    return [Performance(add_months(run_date, j + 1), dpd[j], flag[j]) for j in range(n_months)]


def generate(cfg: GeneratorConfig) -> tuple[list[CustomerFile], GroundTruth]:
    """Build ``cfg.n_customers`` customer files plus their ground truth, sorted by id."""
    b0 = cfg.intercept if cfg.intercept is not None else calibrate_intercept(cfg)
    beta = cfg.beta_vector
    rows = []
    for i in range(cfg.n_customers):
        rng = substream(cfg.seed, "customer", i)
        lat = {k: v[0] for k, v in sample_latents(rng, 1).items()}
        x = lat["features"]
        oot = bool(rng.random() < cfg.oot_share)
        if oot:
            run_date = _random_day(rng, cfg.cutoff + dt.timedelta(days=1), cfg.oot_end)
        else:
            run_date = _random_day(rng, cfg.in_time_start, cfg.cutoff)
        r = float(logistic(b0 + x @ beta)) * (cfg.oot_multiplier if oot else 1.0)
        drawn = int(rng.random() < r)
        none_kind = None
        if rng.random() < cfg.none_fraction:
            none_kind = "no_cc" if rng.random() < 0.5 else "truncated"

        records = _render_trades(rng, lat, run_date, none_kind == "no_cc")
        records += _render_inquiries(rng, lat, run_date)
        records += _render_collections(rng, lat, run_date)
        n_months = int(rng.integers(0, 18)) if none_kind == "truncated" else 18
        records += _render_performance(rng, run_date, drawn, n_months)

        cid = _customer_id(cfg.seed, i)
        label = None if none_kind else drawn
        rows.append((cid, CustomerFile(cid, run_date, tuple(records)), r, label, x, oot))

    rows.sort(key=lambda t: t[0])
    files = [t[1] for t in rows]
    truth = GroundTruth(
        customer_id=[t[0] for t in rows],
        risk=np.array([t[2] for t in rows]),
        label=[t[3] for t in rows],
        features=np.array([t[4] for t in rows]).reshape(len(rows), len(FEATURES)),
        oot=np.array([t[5] for t in rows], dtype=bool),
        intercept=b0,
    )
    return files, truth


def oracle_auc(truth: GroundTruth) -> float:
    """AUC of the true risk against the drawn labels (the Bayes ceiling)."""
    mask = truth.labeled_mask()
    y = np.array([truth.label[i] for i in np.flatnonzero(mask)], dtype=int)
    if y.size == 0 or y.min() == y.max():
        raise DegenerateLabels("oracle AUC needs both classes")
    return auc(truth.risk[mask], y)


# --------------------------------------------------------------------------
# file output


def write_corpus(out_dir, files, truth: GroundTruth, cfg: GeneratorConfig) -> list[str]:
    """Write LNB shards, truth.csv and config.json; returns the shard paths."""
    os.makedirs(out_dir, exist_ok=True)
    corpus_dir = os.path.join(out_dir, "corpus")
    os.makedirs(corpus_dir, exist_ok=True)
    shards = []
    for k in range(0, len(files), cfg.shard_size):
        path = os.path.join(corpus_dir, f"shard-{k // cfg.shard_size:03d}.lnb")
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            for cf in files[k:k + cfg.shard_size]:
                fh.write(serialize_customer(cf))
        shards.append(path)
    with open(os.path.join(out_dir, "truth.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["customer_id", "r", "label", "oot", *FEATURES])
        for i, cid in enumerate(truth.customer_id):
            y = truth.label[i]
            w.writerow([cid, repr(float(truth.risk[i])), "" if y is None else y, int(truth.oot[i]),
                        *(repr(float(v)) for v in truth.features[i])])
    echo = cfg.to_dict()
    echo["calibrated_intercept"] = truth.intercept
    with open(os.path.join(out_dir, "config.json"), "w") as fh:
        json.dump(echo, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return shards


def read_truth(path) -> GroundTruth:
    ids, risk, labels, oot, feats = [], [], [], [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            ids.append(row["customer_id"])
            risk.append(float(row["r"]))
            labels.append(None if row["label"] == "" else int(row["label"]))
            oot.append(row["oot"] == "1")
            feats.append([float(row[f]) for f in FEATURES])
    return GroundTruth(ids, np.array(risk), labels, np.array(feats).reshape(len(ids), len(FEATURES)),
                       np.array(oot, dtype=bool))
