"""Credit-story risk pipeline.

Fixed-width bureau files are parsed, rendered as plain-English stories per
segment, tokenized with a domain vocabulary, enriched with date offsets and
scored by per-segment encoders feeding an MLP head.
"""

from .bureau import CustomerFile, RecordError, parse_customer, parse_customers, segment_customer, serialize_customer
from .labeling import LabeledExample, SplitSpec, label_customer, oversample, split
from .lexicon import Vocabulary, decode, encode, extract_vocabulary
from .metrics import MetricsReport, auc, ks
from .model import ModelConfig, TrainConfig, gradcheck, train
from .pipeline import PRESETS, RiskModel, evaluate, fit, run_ablation
from .story import DEFAULT_RULES, RuleTable, render_customer
from .synthgen import GeneratorConfig, generate, oracle_auc
from .temporal import aggregate, fit_standardizer, temporal_vector

__version__ = "0.1.0"

__all__ = [
    "CustomerFile", "RecordError", "parse_customer", "parse_customers", "segment_customer", "serialize_customer",
    "LabeledExample", "SplitSpec", "label_customer", "oversample", "split",
    "Vocabulary", "decode", "encode", "extract_vocabulary",
    "MetricsReport", "auc", "ks",
    "ModelConfig", "TrainConfig", "gradcheck", "train",
    "PRESETS", "RiskModel", "evaluate", "fit", "run_ablation",
    "DEFAULT_RULES", "RuleTable", "render_customer",
    "GeneratorConfig", "generate", "oracle_auc",
    "aggregate", "fit_standardizer", "temporal_vector",
]
