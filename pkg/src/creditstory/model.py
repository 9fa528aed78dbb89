"""
Per-segment bag-of-token encoders with an MLP head, trained with weighted BCE.

Each segment s has its own embedding table, projection and bias:

    E_s = tanh(W_s @ mean(Emb_s[tokens]) + b_s)

The head sees U = [E_TR, E_IN, E_CL (, standardized temporal vector)] and
outputs logistic(MLP(U)). Backpropagation is written out by hand; mean
pooling is computed as (normalized token-count row) @ Emb_s so a batch is
one matrix product per segment.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .bureau import SEGMENT_TYPES
from .metrics import DegenerateLabels, auc
from .rng import substream

N_TEMPORAL = 9
FORMAT_VERSION = "lnv1"


class NonFiniteLoss(FloatingPointError):
    pass


class ShapeMismatch(ValueError):
    pass


class TokenOutOfRange(IndexError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    dim: int = 32
    hidden: tuple = (64, 32)
    temporal: bool = False
    segments: tuple = SEGMENT_TYPES

    @property
    def input_size(self) -> int:
        return self.dim * len(self.segments) + (N_TEMPORAL if self.temporal else 0)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 128
    max_epochs: int = 50
    patience: int = 5
    min_delta: float = 1e-4
    pos_weight: Optional[float] = None
    neg_weight: float = 1.0
    clamp: float = 1e-7
    seed: int = 0


@dataclass
class Batch:
    """Model inputs: per-segment mean-pooling rows (n x V), temporal block, labels."""

    bags: dict
    temporal: Optional[np.ndarray]
    labels: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return next(iter(self.bags.values())).shape[0]

    def take(self, idx) -> "Batch":
        return Batch(
            {s: b[idx] for s, b in self.bags.items()},
            None if self.temporal is None else self.temporal[idx],
            None if self.labels is None else self.labels[idx],
        )


def bag_rows(token_lists: Sequence[Sequence[int]], vocab_size: int) -> np.ndarray:
    """Row i holds count(token)/len(tokens) so that row @ Emb is the mean embedding."""
    out = np.zeros((len(token_lists), vocab_size))
    for i, toks in enumerate(token_lists):
        if len(toks) == 0:
            raise ShapeMismatch(f"row {i}: empty token sequence (use [EMPTY])")
        toks = np.asarray(toks, dtype=int)
        if toks.min() < 0 or toks.max() >= vocab_size:
            raise TokenOutOfRange(f"row {i}: token id outside [0, {vocab_size})")
        np.add.at(out[i], toks, 1.0 / len(toks))
    return out


# --------------------------------------------------------------------------
# parameters


@dataclass
class ModelParams:
    config: ModelConfig
    tensors: dict = field(default_factory=dict)

    def copy(self) -> "ModelParams":
        return ModelParams(self.config, {k: v.copy() for k, v in self.tensors.items()})

    def names(self) -> list[str]:
        return sorted(self.tensors)

    def check_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.tensors.values())

    def to_dict(self) -> dict:
        cfg = asdict(self.config)
        cfg["hidden"] = list(cfg["hidden"])
        cfg["segments"] = list(cfg["segments"])
        return {
            "config": cfg,
            "tensors": {k: {"shape": list(v.shape), "data": v.ravel().tolist()}
                        for k, v in sorted(self.tensors.items())},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        c = dict(d["config"])
        c["hidden"] = tuple(c["hidden"])
        c["segments"] = tuple(c["segments"])
        tensors = {k: np.array(v["data"], dtype=float).reshape(v["shape"]) for k, v in d["tensors"].items()}
        return cls(ModelConfig(**c), tensors)


def init_params(config: ModelConfig, seed: int = 0) -> ModelParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every tensor, in a fixed order."""
    rng = substream(seed, "init")
    d = config.dim
    t = {}

    def uni(shape, fan_in):
        bound = 1.0 / math.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    for s in config.segments:
        t[f"emb.{s}"] = uni((config.vocab_size, d), d)
        t[f"proj.{s}"] = uni((d, d), d)
        t[f"bias.{s}"] = uni((d,), d)
    sizes = (config.input_size, *config.hidden)
    for k in range(len(config.hidden)):
        t[f"head.w{k + 1}"] = uni((sizes[k + 1], sizes[k]), sizes[k])
        t[f"head.b{k + 1}"] = uni((sizes[k + 1],), sizes[k])
    t["head.out_w"] = uni((sizes[-1],), sizes[-1])
    t["head.out_b"] = uni((1,), sizes[-1])
    return ModelParams(config, t)


# --------------------------------------------------------------------------
# forward / backward


def encode_segment(tokens: Sequence[int], s: str, p: ModelParams) -> np.ndarray:
    """Embedding of one token sequence under segment ``s``'s encoder."""
    row = bag_rows([list(tokens)], p.config.vocab_size)[0]
    pooled = row @ p.tensors[f"emb.{s}"]
    return np.tanh(p.tensors[f"proj.{s}"] @ pooled + p.tensors[f"bias.{s}"])


def _forward(p: ModelParams, batch: Batch, cache: bool = False):
    cfg = p.config
    t = p.tensors
    parts, store = [], {}
    for s in cfg.segments:
        bag = batch.bags[s]
        if bag.shape[1] != cfg.vocab_size:
            raise ShapeMismatch(f"segment {s}: bag width {bag.shape[1]} != vocab {cfg.vocab_size}")
        pooled = bag @ t[f"emb.{s}"]
        e = np.tanh(pooled @ t[f"proj.{s}"].T + t[f"bias.{s}"])
        parts.append(e)
        store[s] = (pooled, e)
    if cfg.temporal:
        if batch.temporal is None or batch.temporal.shape[1] != N_TEMPORAL:
            raise ShapeMismatch("temporal model needs an (n, 9) temporal block")
        parts.append(batch.temporal)
    u = np.concatenate(parts, axis=1)
    acts = [u]
    h = u
    for k in range(len(cfg.hidden)):
        h = np.tanh(h @ t[f"head.w{k + 1}"].T + t[f"head.b{k + 1}"])
        acts.append(h)
    logit = h @ t["head.out_w"] + t["head.out_b"][0]
    if cache:
        return logit, (store, acts)
    return logit


def logistic(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def predict_proba(p: ModelParams, batch: Batch, clamp: float = 1e-7) -> np.ndarray:
    return np.clip(logistic(_forward(p, batch)), clamp, 1.0 - clamp)


def forward(p: ModelParams, batch: Batch, clamp: float = 1e-7) -> np.ndarray:
    """Clamped default probabilities for every row of ``batch``."""
    return predict_proba(p, batch, clamp)


def class_weights(labels, cfg: TrainConfig) -> tuple[float, float]:
    y = np.asarray(labels)
    if cfg.pos_weight is not None:
        return float(cfg.pos_weight), cfg.neg_weight
    n_pos = float(y.sum())
    if n_pos == 0 or n_pos == y.size:
        raise DegenerateLabels("training labels need both classes")
    return (y.size - n_pos) / n_pos, cfg.neg_weight


def weighted_bce(y_hat, y, w_pos: float, w_neg: float) -> np.ndarray:
    """Per-sample loss -[w+ y ln p + w- (1 - y) ln(1 - p)]."""
    return -(w_pos * y * np.log(y_hat) + w_neg * (1 - y) * np.log(1 - y_hat))


def loss(batch: Batch, p: ModelParams, w_pos: float, w_neg: float = 1.0,
         clamp: float = 1e-7) -> tuple[float, dict]:
    """Mean weighted BCE over the batch and its gradient for every tensor."""
    cfg = p.config
    t = p.tensors
    y = batch.labels.astype(float)
    n = y.size
    if n == 0:
        raise ShapeMismatch("empty batch")
    logit, (store, acts) = _forward(p, batch, cache=True)
    raw = logistic(logit)
    y_hat = np.clip(raw, clamp, 1.0 - clamp)
    value = float(weighted_bce(y_hat, y, w_pos, w_neg).mean())
    if not math.isfinite(value):
        raise NonFiniteLoss(f"loss is {value}")

    inside = (raw > clamp) & (raw < 1.0 - clamp)
    d_logit = (-w_pos * y * (1.0 - raw) + w_neg * (1.0 - y) * raw) * inside / n

    g = {}
    h = acts[-1]
    g["head.out_w"] = h.T @ d_logit
    g["head.out_b"] = np.array([d_logit.sum()])
    dh = np.outer(d_logit, t["head.out_w"])
    for k in range(len(cfg.hidden), 0, -1):
        dz = dh * (1.0 - acts[k] ** 2)
        g[f"head.w{k}"] = dz.T @ acts[k - 1]
        g[f"head.b{k}"] = dz.sum(axis=0)
        dh = dz @ t[f"head.w{k}"]
    du = dh
    for j, s in enumerate(cfg.segments):
        pooled, e = store[s]
        dz = du[:, j * cfg.dim:(j + 1) * cfg.dim] * (1.0 - e ** 2)
        g[f"proj.{s}"] = dz.T @ pooled
        g[f"bias.{s}"] = dz.sum(axis=0)
        g[f"emb.{s}"] = batch.bags[s].T @ (dz @ t[f"proj.{s}"])
    for k, v in g.items():
        if not np.all(np.isfinite(v)):
            raise NonFiniteLoss(f"gradient of {k} is not finite")
    return value, g


# --------------------------------------------------------------------------
# optimizer and training


class Adam:
    def __init__(self, params: ModelParams, cfg: TrainConfig):
        self.cfg = cfg
        self.m = {k: np.zeros_like(v) for k, v in params.tensors.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.tensors.items()}
        self.t = 0

    def step(self, params: ModelParams, grads: dict) -> None:
        c = self.cfg
        self.t += 1
        bc1 = 1.0 - c.beta1 ** self.t
        bc2 = 1.0 - c.beta2 ** self.t
        for k in sorted(grads):
            g = grads[k]
            self.m[k] = c.beta1 * self.m[k] + (1.0 - c.beta1) * g
            self.v[k] = c.beta2 * self.v[k] + (1.0 - c.beta2) * g * g
            params.tensors[k] -= c.learning_rate * (self.m[k] / bc1) / (np.sqrt(self.v[k] / bc2) + c.adam_eps)


@dataclass
class TrainLog:
    epochs: list = field(default_factory=list)
    best_epoch: int = -1
    best_val_auc: float = float("nan")
    stopped_early: bool = False
    phases: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _check_labels(y, what: str):
    y = np.asarray(y)
    if y.size == 0 or y.min() == y.max():
        raise DegenerateLabels(f"{what} partition needs both classes")


def train(train_data: Batch, val_data: Batch, model_cfg: ModelConfig, cfg: TrainConfig = TrainConfig(),
          init: Optional[ModelParams] = None, log: Optional[TrainLog] = None,
          on_epoch: Optional[Callable] = None) -> tuple[ModelParams, TrainLog]:
    """Mini-batch Adam with early stopping on validation AUC.

    Returns the parameters of the best validation epoch. ``init`` continues
    from existing parameters (used for sharded training).
    """
    _check_labels(train_data.labels, "train")
    _check_labels(val_data.labels, "validation")
    w_pos, w_neg = class_weights(train_data.labels, cfg)
    params = init.copy() if init is not None else init_params(model_cfg, cfg.seed)
    log = log if log is not None else TrainLog()
    opt = Adam(params, cfg)
    n = len(train_data)
    phase = len(log.phases)

    best = params.copy()
    best_auc = auc(predict_proba(params, val_data, cfg.clamp), val_data.labels)
    best_epoch, since = 0, 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = substream(cfg.seed, "shuffle", phase, epoch).permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            value, grads = loss(train_data.take(idx), params, w_pos, w_neg, cfg.clamp)
            opt.step(params, grads)
            total += value * len(idx)
        if not params.check_finite():
            raise NonFiniteLoss(f"parameters became non-finite in epoch {epoch}")
        val_auc = auc(predict_proba(params, val_data, cfg.clamp), val_data.labels)
        log.epochs.append({"phase": phase, "epoch": epoch, "train_loss": total / n, "val_auc": val_auc})
        if on_epoch is not None:
            on_epoch(epoch, params)
        if val_auc > best_auc + cfg.min_delta:
            best, best_auc, best_epoch, since = params.copy(), val_auc, epoch, 0
        else:
            since += 1
            if since >= cfg.patience:
                log.stopped_early = True
                break
    log.best_epoch = best_epoch
    log.best_val_auc = best_auc
    log.phases.append({"phase": phase, "n_train": n, "epochs_run": log.epochs[-1]["epoch"] if log.epochs else 0,
                       "best_epoch": best_epoch, "best_val_auc": best_auc})
    return best, log


def train_sharded(train_data: Batch, val_data: Batch, model_cfg: ModelConfig, cfg: TrainConfig,
                  n_shards: int = 4) -> tuple[ModelParams, TrainLog]:
    """Train on ``n_shards`` disjoint slices one after another, carrying parameters over."""
    order = substream(cfg.seed, "shards").permutation(len(train_data))
    chunks = np.array_split(order, n_shards)
    params, log = None, TrainLog()
    for chunk in chunks:
        params, log = train(train_data.take(np.sort(chunk)), val_data, model_cfg, cfg, init=params, log=log)
    return params, log


# --------------------------------------------------------------------------
# majority vote across single-segment models


def single_segment_config(vocab_size: int, segment: str, dim: int = 32, hidden=(32, 16)) -> ModelConfig:
    return ModelConfig(vocab_size=vocab_size, dim=dim, hidden=tuple(hidden), temporal=False, segments=(segment,))


def vote(probabilities) -> tuple[int, float]:
    """Majority vote (>= 2 of 3 at or above 0.5) and the mean probability as a ranking score."""
    probs = np.asarray(probabilities, dtype=float)
    if probs.shape != (3,):
        raise ShapeMismatch(f"expected three segment probabilities, got shape {probs.shape}")
    return int((probs >= 0.5).sum() >= 2), float(probs.mean())


def predict_vote(batch: Batch, models: dict, clamp: float = 1e-7) -> tuple[np.ndarray, np.ndarray]:
    """Votes and mean-probability scores for every row, from one model per segment."""
    if set(models) != set(SEGMENT_TYPES):
        raise ShapeMismatch(f"need one model per segment {SEGMENT_TYPES}, got {sorted(models)}")
    probs = np.column_stack([predict_proba(models[s], batch, clamp) for s in SEGMENT_TYPES])
    return ((probs >= 0.5).sum(axis=1) >= 2).astype(int), probs.mean(axis=1)


# --------------------------------------------------------------------------
# gradient check


def relative_error(analytic: float, numeric: float, atol: float = 1e-8) -> float:
    scale = max(abs(analytic), abs(numeric))
    if scale < atol:
        return 0.0 if abs(analytic - numeric) < atol else float("inf")
    return abs(analytic - numeric) / scale


def gradcheck(p: ModelParams, batch: Batch, w_pos: float = 1.0, w_neg: float = 1.0,
              n_samples: int = 120, step: float = 1e-5, seed: int = 0,
              grad_fn: Optional[Callable] = None, clamp: float = 1e-7) -> float:
    """Max relative error between analytic and central-difference gradients.

    Samples at least ``n_samples`` coordinates spread over every tensor;
    embedding coordinates are drawn from rows used by the batch. ``grad_fn``
    substitutes the analytic gradient (for mutation tests).
    """
    grad_fn = grad_fn or (lambda b, q: loss(b, q, w_pos, w_neg, clamp))
    _, grads = grad_fn(batch, p)
    rng = substream(seed, "gradcheck")
    names = p.names()
    per_tensor = max(1, math.ceil(n_samples / len(names)))
    work = p.copy()
    worst = 0.0
    for name in names:
        tensor = work.tensors[name]
        if name.startswith("emb."):
            rows = np.flatnonzero(batch.bags[name[4:]].sum(axis=0))
            coords = [(int(rng.choice(rows)), int(rng.integers(tensor.shape[1]))) for _ in range(per_tensor)]
        else:
            coords = [tuple(int(rng.integers(d)) for d in tensor.shape) for _ in range(per_tensor)]
        for c in coords:
            orig = tensor[c]
            tensor[c] = orig + step
            up, _ = loss(batch, work, w_pos, w_neg, clamp)
            tensor[c] = orig - step
            down, _ = loss(batch, work, w_pos, w_neg, clamp)
            tensor[c] = orig
            numeric = (up - down) / (2 * step)
            worst = max(worst, relative_error(float(grads[name][c]), numeric))
    return worst
