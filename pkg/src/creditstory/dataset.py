"""Corpus loading and featurization into model batches."""

from __future__ import annotations

import glob
import os
from typing import Optional, Sequence

import numpy as np

from .bureau import SEGMENT_TYPES, CustomerFile, parse_customers
from .labeling import LabeledExample, build_example
from .lexicon import EMPTY, TokenSequence, Vocabulary, encode
from .model import Batch, bag_rows
from .story import DEFAULT_RULES, RuleTable
from .temporal import Standardizer


def shard_paths(data_dir) -> list[str]:
    paths = sorted(glob.glob(os.path.join(data_dir, "corpus", "*.lnb")))
    if not paths:
        paths = sorted(glob.glob(os.path.join(data_dir, "*.lnb")))
    return paths


def read_corpus(data_dir) -> list[CustomerFile]:
    """Parse every LNB shard under ``data_dir`` (or ``data_dir/corpus``) in file order."""
    files = []
    paths = shard_paths(data_dir)
    if not paths:
        raise FileNotFoundError(f"no .lnb shards under {data_dir}")
    for path in paths:
        with open(path, encoding="latin-1", newline="") as fh:
            files.extend(parse_customers(fh.read()))
    return files


def build_examples(files: Sequence[CustomerFile], rules: RuleTable = DEFAULT_RULES) -> list[LabeledExample]:
    return [build_example(cf, rules) for cf in files]


def labeled(examples: Sequence[LabeledExample]) -> list[LabeledExample]:
    return [ex for ex in examples if ex.label is not None]


def segment_tokens(ex: LabeledExample, s: str, vocab: Vocabulary) -> TokenSequence:
    # a segment without records is the single [EMPTY] token
    if ex.segment_sizes.get(s, 1) == 0:
        return TokenSequence((0,), (EMPTY,))
    return encode(ex.stories[s], vocab)


def make_batch(examples: Sequence[LabeledExample], vocab: Vocabulary,
               standardizer: Optional[Standardizer] = None) -> Batch:
    bags = {
        s: bag_rows([segment_tokens(ex, s, vocab).tokens for ex in examples], len(vocab))
        for s in SEGMENT_TYPES
    }
    temporal = None
    if standardizer is not None:
        raw = np.array([ex.temporal for ex in examples]).reshape(len(examples), 9)
        temporal = standardizer.apply(raw)
    labels = np.array([-1 if ex.label is None else ex.label for ex in examples], dtype=float)
    return Batch(bags, temporal, labels)
