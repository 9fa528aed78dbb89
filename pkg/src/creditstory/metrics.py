"""Ranking and stability metrics: AUC, KS, score deciles and PSI."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import rankdata

PSI_FLOOR = 1e-4


class DegenerateLabels(ValueError):
    pass


class TooFewScores(ValueError):
    pass


def _check(scores, labels):
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(labels).ravel().astype(int)
    if s.shape != y.shape:
        raise ValueError(f"scores and labels differ in length: {s.shape} vs {y.shape}")
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == y.size:
        raise DegenerateLabels("need at least one positive and one negative label")
    return s, y, n_pos


def auc(scores, labels) -> float:
    """Mann-Whitney AUC with average ranks for ties (a tie counts one half)."""
    s, y, n_pos = _check(scores, labels)
    n_neg = y.size - n_pos
    ranks = rankdata(s)
    return float((ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def auc_pairwise(scores, labels) -> float:
    """O(n_pos * n_neg) reference implementation."""
    s, y, _ = _check(scores, labels)
    pos, neg = s[y == 1], s[y == 0]
    diff = pos[:, None] - neg[None, :]
    return float(((diff > 0) + 0.5 * (diff == 0)).mean())


def ks(scores, labels) -> float:
    """Max over thresholds of |TPR - FPR|."""
    s, y, n_pos = _check(scores, labels)
    n_neg = y.size - n_pos
    order = np.argsort(-s, kind="mergesort")
    s_sorted, y_sorted = s[order], y[order]
    tpr = np.cumsum(y_sorted) / n_pos
    fpr = np.cumsum(1 - y_sorted) / n_neg
    # only evaluate after the last element of each tied block
    last = np.r_[s_sorted[1:] != s_sorted[:-1], True]
    return float(np.max(np.abs(tpr[last] - fpr[last])))


def decile_edges(train_scores) -> np.ndarray:
    s = np.asarray(train_scores, dtype=float)
    if s.size < 10:
        raise TooFewScores(f"need at least 10 train scores, got {s.size}")
    return np.quantile(s, np.linspace(0.1, 0.9, 9))


def bin_shares(scores, edges) -> np.ndarray:
    idx = np.searchsorted(edges, np.asarray(scores, dtype=float), side="right")
    return np.bincount(idx, minlength=len(edges) + 1) / max(len(scores), 1)


def psi_from_shares(actual, expected, floor: float = PSI_FLOOR) -> float:
    a = np.maximum(np.asarray(actual, dtype=float), floor)
    e = np.maximum(np.asarray(expected, dtype=float), floor)
    a, e = a / a.sum(), e / e.sum()
    return float(np.sum((a - e) * np.log(a / e)))


def deciles_and_psi(train_scores, eval_scores) -> tuple[np.ndarray, float]:
    """Train-score decile cut points (the 10%..90% quantiles) and PSI of eval vs train."""
    edges = decile_edges(train_scores)
    psi = psi_from_shares(bin_shares(eval_scores, edges), bin_shares(train_scores, edges))
    return edges, psi


@dataclass
class MetricsReport:
    auc: Optional[float]
    ks: Optional[float]
    event_rate: Optional[float]
    n: int
    n_none: int = 0
    psi: Optional[float] = None
    decile_edges: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate_scores(scores, labels, train_scores=None, n_none: int = 0) -> MetricsReport:
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=int)
    a = k = None
    if y.size and 0 < y.sum() < y.size:
        a, k = auc(s, y), ks(s, y)
    psi, edges = None, []
    if train_scores is not None and len(train_scores) >= 10 and s.size:
        e, psi = deciles_and_psi(train_scores, s)
        edges = e.tolist()
    return MetricsReport(
        auc=a,
        ks=k,
        event_rate=float(y.mean()) if y.size else None,
        n=int(y.size),
        n_none=n_none,
        psi=psi,
        decile_edges=edges,
    )
