"""
Six versions, one corpus
========================

Run the v1..v6 presets on the same partitions: majority vote over segment
models, then the domain tokenizer, oversampling, pooled embeddings, and
finally the date-offset features. The temporal-heavy scenario puts more of
the planted risk on recency, which only v6 can see directly.
"""

from creditstory.dataset import build_examples
from creditstory.labeling import SplitSpec, split
from creditstory.pipeline import PRESETS, format_ablation, run_ablation
from creditstory.synthgen import GeneratorConfig, generate, oracle_auc

for scenario, versions in (("default", list(PRESETS)), ("temporal-heavy", ["v5", "v6"])):
    files, truth = generate(GeneratorConfig(n_customers=20000, seed=42, scenario=scenario))
    parts = split(build_examples(files), SplitSpec(seed=42))
    print(f"\n{scenario} corpus, Bayes AUC {oracle_auc(truth):.4f}")
    report = run_ablation(parts, versions, seed=42)
    print(format_ablation(report))
