"""
Model versions v1..v6, fitting, scoring, persistence and the ablation sweep.

=======  ========  =========  ==========  ========  ========  =======
version  mode      tokenizer  oversample  temporal  head      sharded
=======  ========  =========  ==========  ========  ========  =======
v1       vote      base       none        off       (32, 16)  yes
v2       vote      domain     none        off       (32, 16)  yes
v3       vote      domain     0.30        off       (32, 16)  yes
v4       vote      domain     0.10        off       (32, 16)  no
v5       pooled    domain     none        off       (64, 32)  no
v6       pooled    domain     none        on        (64, 32)  no
=======  ========  =========  ==========  ========  ========  =======
"""

from __future__ import annotations

import dataclasses
import json
import logging
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bureau import SEGMENT_TYPES
from .dataset import labeled, make_batch
from .labeling import LabeledExample, oversample
from .lexicon import Vocabulary, base_vocabulary, extract_vocabulary
from .metrics import MetricsReport, evaluate_scores
from .model import (
    FORMAT_VERSION,
    ModelConfig,
    ModelParams,
    TrainConfig,
    TrainLog,
    predict_proba,
    predict_vote,
    single_segment_config,
    train,
    train_sharded,
)
from .story import DEFAULT_RULES, RuleTable
from .temporal import Standardizer, fit_standardizer

logger = logging.getLogger(__name__)

SMALL_HEAD = (32, 16)
EXPANDED_HEAD = (64, 32)


@dataclass(frozen=True)
class VersionPreset:
    name: str
    mode: str                 # "vote" or "pooled"
    tokenizer: str            # "base" or "domain"
    oversample: Optional[float]
    temporal: bool
    hidden: tuple
    sharded: bool
    n_shards: int = 4

    def flags(self) -> dict:
        d = dataclasses.asdict(self)
        d["hidden"] = list(self.hidden)
        return d


PRESETS = {
    "v1": VersionPreset("v1", "vote", "base", None, False, SMALL_HEAD, True),
    "v2": VersionPreset("v2", "vote", "domain", None, False, SMALL_HEAD, True),
    "v3": VersionPreset("v3", "vote", "domain", 0.30, False, SMALL_HEAD, True),
    "v4": VersionPreset("v4", "vote", "domain", 0.10, False, SMALL_HEAD, False),
    "v5": VersionPreset("v5", "pooled", "domain", None, False, EXPANDED_HEAD, False),
    "v6": VersionPreset("v6", "pooled", "domain", None, True, EXPANDED_HEAD, False),
}


def get_preset(name: str) -> VersionPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown version preset {name!r}; choose from {sorted(PRESETS)}") from None


@dataclass
class RiskModel:
    preset: VersionPreset
    vocab: Vocabulary
    standardizer: Optional[Standardizer]
    params: dict              # "pooled" -> ModelParams, or one entry per segment

    def batch(self, examples: Sequence[LabeledExample]):
        return make_batch(examples, self.vocab, self.standardizer)

    def score(self, examples: Sequence[LabeledExample]) -> np.ndarray:
        """Default probability (pooled) or mean segment probability (vote)."""
        if not examples:
            return np.empty(0)
        b = self.batch(examples)
        if self.preset.mode == "pooled":
            return predict_proba(self.params["pooled"], b)
        return predict_vote(b, self.params)[1]

    def votes(self, examples: Sequence[LabeledExample]) -> np.ndarray:
        if self.preset.mode != "vote":
            return (self.score(examples) >= 0.5).astype(int)
        return predict_vote(self.batch(examples), self.params)[0]

    def to_dict(self) -> dict:
        return {
            "version": FORMAT_VERSION,
            "preset": self.preset.flags(),
            "vocabulary": self.vocab.to_list(),
            "standardizer": None if self.standardizer is None else self.standardizer.to_dict(),
            "models": {k: p.to_dict() for k, p in sorted(self.params.items())},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RiskModel":
        if d.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format {d.get('version')!r}")
        flags = dict(d["preset"])
        flags["hidden"] = tuple(flags["hidden"])
        std = None if d["standardizer"] is None else Standardizer.from_dict(d["standardizer"])
        return cls(VersionPreset(**flags), Vocabulary.from_list(d["vocabulary"]), std,
                   {k: ModelParams.from_dict(v) for k, v in d["models"].items()})

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "RiskModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def build_vocabulary(preset: VersionPreset, examples: Sequence[LabeledExample],
                     rules: RuleTable = DEFAULT_RULES) -> Vocabulary:
    corpus = [text for ex in examples for text in ex.stories.values()]
    if preset.tokenizer == "base":
        return base_vocabulary(rules, corpus)
    return extract_vocabulary(rules, corpus)


def fit(preset: VersionPreset, train_examples: Sequence[LabeledExample],
        val_examples: Sequence[LabeledExample], seed: int = 0,
        train_cfg: Optional[TrainConfig] = None) -> tuple[RiskModel, TrainLog]:
    """Train one version preset on labeled train/validation examples."""
    cfg = train_cfg or TrainConfig()
    cfg = dataclasses.replace(cfg, seed=seed)
    train_examples = oversample(labeled(train_examples), preset.oversample, seed)
    val_examples = labeled(val_examples)

    vocab = build_vocabulary(preset, train_examples)
    std = fit_standardizer([ex.temporal for ex in train_examples]) if preset.temporal else None
    tr = make_batch(train_examples, vocab, std)
    va = make_batch(val_examples, vocab, std)

    fit_one = (lambda mc: train_sharded(tr, va, mc, cfg, preset.n_shards)) if preset.sharded \
        else (lambda mc: train(tr, va, mc, cfg))

    params = {}
    if preset.mode == "pooled":
        mc = ModelConfig(vocab_size=len(vocab), hidden=tuple(preset.hidden), temporal=preset.temporal)
        params["pooled"], log = fit_one(mc)
    elif preset.mode == "vote":
        log = TrainLog()
        for s in SEGMENT_TYPES:
            params[s], seg_log = fit_one(single_segment_config(len(vocab), s, hidden=preset.hidden))
            for row in seg_log.epochs:
                log.epochs.append({**row, "segment": s})
            for row in seg_log.phases:
                log.phases.append({**row, "segment": s})
        log.best_val_auc = float("nan")
    else:
        raise ValueError(f"unknown mode {preset.mode!r}")
    return RiskModel(preset, vocab, std, params), log


def evaluate(model: RiskModel, examples: Sequence[LabeledExample],
             train_scores: Optional[np.ndarray] = None) -> MetricsReport:
    """Metrics on labeled examples; None-labeled ones are counted and skipped."""
    lab = labeled(examples)
    scores = model.score(lab)
    y = np.array([ex.label for ex in lab], dtype=int)
    return evaluate_scores(scores, y, train_scores, n_none=len(examples) - len(lab))


def run_ablation(parts: dict, versions: Sequence[str], seed: int = 0,
                 train_cfg: Optional[TrainConfig] = None,
                 splits: Sequence[str] = ("holdout", "oot")) -> dict:
    """Fit and evaluate each version on the same partitions; failures are recorded per row."""
    report = {}
    for name in versions:
        row = {"version": name}
        t0 = time.perf_counter()
        try:
            preset = get_preset(name)
            row["preset"] = preset.flags()
            model, log = fit(preset, parts["train"], parts["validation"], seed, train_cfg)
            train_scores = model.score(labeled(parts["train"]))
            for split in splits:
                row[split] = evaluate(model, parts[split], train_scores).to_dict()
            row["epochs_run"] = len(log.epochs)
            row["error"] = None
        except Exception as exc:  # recorded per version; the sweep continues
            logger.warning("version %s failed: %s", name, exc)
            row["error"] = f"{type(exc).__name__}: {exc}"
        row["seconds"] = time.perf_counter() - t0
        report[name] = row
    return report


def format_ablation(report: dict) -> str:
    lines = [f"{'version':<8} {'holdout_auc':>11} {'oot_auc':>8} {'seconds':>8}  status"]
    for name, row in report.items():
        if row.get("error"):
            lines.append(f"{name:<8} {'-':>11} {'-':>8} {row['seconds']:8.1f}  error: {row['error']}")
            continue
        h = row.get("holdout", {}).get("auc")
        o = row.get("oot", {}).get("auc")
        fmt = lambda v: f"{v:.4f}" if v is not None else "-"
        lines.append(f"{name:<8} {fmt(h):>11} {fmt(o):>8} {row['seconds']:8.1f}  ok")
    return "\n".join(lines)
