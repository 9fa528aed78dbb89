import numpy as np
import pytest

from creditstory.dataset import build_examples, labeled, make_batch, segment_tokens
from creditstory.labeling import SplitSpec, split
from creditstory.model import TrainConfig
from creditstory.pipeline import (
    PRESETS,
    RiskModel,
    build_vocabulary,
    evaluate,
    fit,
    format_ablation,
    get_preset,
    run_ablation,
)

QUICK = TrainConfig(max_epochs=2)


@pytest.fixture(scope="module")
def parts(small_corpus):
    files, _ = small_corpus
    return split(build_examples(files), SplitSpec(seed=42))


def test_preset_table():
    rows = {name: (p.mode, p.tokenizer, p.oversample, p.temporal, p.hidden, p.sharded) for name, p in PRESETS.items()}
    assert rows == {
        "v1": ("vote", "base", None, False, (32, 16), True),
        "v2": ("vote", "domain", None, False, (32, 16), True),
        "v3": ("vote", "domain", 0.30, False, (32, 16), True),
        "v4": ("vote", "domain", 0.10, False, (32, 16), False),
        "v5": ("pooled", "domain", None, False, (64, 32), False),
        "v6": ("pooled", "domain", None, True, (64, 32), False),
    }
    with pytest.raises(KeyError, match="v7"):
        get_preset("v7")


def test_vocabularies(parts):
    base = build_vocabulary(PRESETS["v1"], parts["train"])
    dom = build_vocabulary(PRESETS["v2"], parts["train"])
    assert base.domain_phrases == () and "credit_card" in dom.tokens


def test_empty_segment_is_empty_token(parts):
    ex = next(e for e in parts["train"] if e.segment_sizes["CL"] == 0)
    vocab = build_vocabulary(PRESETS["v5"], parts["train"])
    assert segment_tokens(ex, "CL", vocab).token_strings == ("[EMPTY]",)


def test_make_batch_temporal_block(parts):
    vocab = build_vocabulary(PRESETS["v6"], parts["train"])
    b = make_batch(parts["train"][:10], vocab)
    assert b.temporal is None and b.bags["TR"].shape == (10, len(vocab))
    np.testing.assert_allclose(b.bags["IN"].sum(axis=1), 1.0)


def test_v1_logs_shard_phases(parts):
    model, log = fit(PRESETS["v1"], parts["train"], parts["validation"], 42, QUICK)
    assert sorted(model.params) == ["CL", "IN", "TR"]
    for s in ("TR", "IN", "CL"):
        assert [p["phase"] for p in log.phases if p["segment"] == s] == [0, 1, 2, 3]
    votes = model.votes(labeled(parts["holdout"]))
    assert set(np.unique(votes)) <= {0, 1}


def test_v6_save_load_bitwise(parts, tmp_path):
    model, _ = fit(PRESETS["v6"], parts["train"], parts["validation"], 42, QUICK)
    assert model.standardizer is not None
    path = tmp_path / "model.json"
    model.save(path)
    back = RiskModel.load(path)
    hold = labeled(parts["holdout"])
    assert np.array_equal(model.score(hold), back.score(hold))
    for k, p in model.params.items():
        for name in p.tensors:
            assert np.array_equal(p.tensors[name], back.params[k].tensors[name])


def test_fit_deterministic(parts):
    a, _ = fit(PRESETS["v5"], parts["train"], parts["validation"], 7, QUICK)
    b, _ = fit(PRESETS["v5"], parts["train"], parts["validation"], 7, QUICK)
    for name in a.params["pooled"].tensors:
        assert np.array_equal(a.params["pooled"].tensors[name], b.params["pooled"].tensors[name])


def test_evaluate_counts_none(parts):
    model, _ = fit(PRESETS["v5"], parts["train"], parts["validation"], 42, QUICK)
    train_scores = model.score(labeled(parts["train"]))
    rep = evaluate(model, parts["oot"], train_scores)
    assert rep.n_none == sum(e.label is None for e in parts["oot"])
    assert rep.n == len(parts["oot"]) - rep.n_none
    assert evaluate(model, parts["train"], train_scores).psi == 0.0


def test_ablation_order_and_isolation(parts):
    rep = run_ablation(parts, ["v5", "v7", "v4"], seed=42, train_cfg=QUICK)
    assert list(rep) == ["v5", "v7", "v4"]
    assert rep["v7"]["error"] and "v7" in rep["v7"]["error"]
    assert rep["v5"]["error"] is None and rep["v4"]["error"] is None
    assert 0.0 <= rep["v4"]["holdout"]["auc"] <= 1.0
    table = format_ablation(rep)
    assert table.splitlines()[1].startswith("v5") and "error" in table.splitlines()[2]
