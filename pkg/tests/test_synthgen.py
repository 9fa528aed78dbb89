import dataclasses
import json

import numpy as np
import pytest

from creditstory.bureau import parse_customers, serialize_customer, serialize_customers
from creditstory.labeling import label_customer
from creditstory.metrics import DegenerateLabels
from creditstory.synthgen import (
    FEATURES,
    ConfigInvalid,
    GeneratorConfig,
    GroundTruth,
    calibrate_intercept,
    generate,
    logistic,
    oracle_auc,
    read_truth,
    sample_latents,
    write_corpus,
)
from creditstory.rng import substream

STATUS_ORDINAL = {"01": 0, "09": 0, "02": 1, "03": 2, "04": 3, "05": 4, "07": 5, "08": 5}


def test_calibration_zero_beta():
    cfg = GeneratorConfig(beta={f: 0.0 for f in FEATURES})
    assert calibrate_intercept(cfg, target=0.5) == 0.0


def test_calibration_hits_target_on_fresh_draws():
    cfg = GeneratorConfig()
    b0 = calibrate_intercept(cfg)
    x = sample_latents(substream(12345, "check"), 100_000)["features"]
    assert 0.038 <= logistic(b0 + x @ cfg.beta_vector).mean() <= 0.042


def test_calibration_monotone():
    assert calibrate_intercept(GeneratorConfig(event_rate=0.02)) < calibrate_intercept(GeneratorConfig(event_rate=0.04))


@pytest.mark.parametrize("bad", [
    {"event_rate": 0.06}, {"event_rate": 0.0}, {"n_customers": 0}, {"scenario": "nope"},
    {"oot_multiplier": 1.5}, {"beta": {"shoe_size": 1.0}}, {"unknown_key": 1},
])
def test_config_invalid(bad):
    with pytest.raises(ConfigInvalid):
        GeneratorConfig.from_dict({**GeneratorConfig().to_dict(), **bad})


def test_config_dict_round_trip():
    cfg = GeneratorConfig(n_customers=10, scenario="temporal-heavy", seed=3)
    assert GeneratorConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_event_rate_n1000(small_corpus):
    _, truth = small_corpus
    ys = [y for y in truth.label if y is not None]
    assert 0.03 <= np.mean(ys) <= 0.05


def test_dates_not_after_run_date(small_corpus):
    files, _ = small_corpus
    for cf in files:
        assert all(r.date <= cf.run_date for r in cf.records if r.segment is not None)


def test_labels_reproduced_by_labeler(small_corpus):
    files, truth = small_corpus
    assert [label_customer(cf) for cf in files] == truth.label


def test_none_fraction(small_corpus):
    _, truth = small_corpus
    share = 1 - truth.labeled_mask().mean()
    assert 0.005 <= share <= 0.04


def test_latents_rendered_consistently(small_corpus):
    files, truth = small_corpus
    col = {f: i for i, f in enumerate(FEATURES)}
    for cf, x in zip(files, truth.features):
        ins = [(cf.run_date - r.inquiry_date).days for r in cf.entries("IN")]
        cls = cf.entries("CL")
        trades = cf.entries("TR")
        assert x[col["inquiries_6m"]] == sum(d < 183 for d in ins)
        want = max(0.0, 1 - min(ins) / 730) if ins else 0.0
        assert x[col["inquiry_recency"]] == pytest.approx(want, abs=1e-12)
        assert x[col["open_collection"]] == any(c.status == "O" for c in cls)
        want = max(0.0, 1 - min((cf.run_date - c.assign_date).days for c in cls) / 1825) if cls else 0.0
        assert x[col["collection_recency"]] == pytest.approx(want, abs=1e-12)
        assert x[col["worst_status"]] == max(STATUS_ORDINAL[t.status] for t in trades)
        oldest_years = (cf.run_date - min(t.open_date for t in trades)).days / 365.25
        assert x[col["years_oldest_trade"]] == pytest.approx(oldest_years, abs=0.01)


def test_oot_multiplier(small_corpus):
    _, truth = small_corpus
    base = logistic(truth.intercept + truth.features @ GeneratorConfig().beta_vector)
    np.testing.assert_allclose(truth.risk, np.where(truth.oot, 0.9 * base, base), rtol=1e-12)


def test_deterministic_bytes(small_corpus):
    files, _ = small_corpus
    again, _ = generate(GeneratorConfig(n_customers=1000, seed=42))
    assert serialize_customers(again) == serialize_customers(files)


def test_seed_isolation():
    a, _ = generate(GeneratorConfig(n_customers=300, seed=1))
    b, _ = generate(GeneratorConfig(n_customers=300, seed=2))
    assert not {cf.customer_id for cf in a} & {cf.customer_id for cf in b}


def test_sorted_by_id(small_corpus):
    files, _ = small_corpus
    ids = [cf.customer_id for cf in files]
    assert ids == sorted(ids) and len(set(ids)) == len(ids)


def _truth(risk, labels):
    n = len(risk)
    return GroundTruth([f"C{i}" for i in range(n)], np.asarray(risk, dtype=float), list(labels),
                       np.zeros((n, len(FEATURES))), np.zeros(n, dtype=bool))


def test_oracle_edge_cases():
    assert oracle_auc(_truth([0.3] * 6, [0, 1, 0, 1, None, 0])) == 0.5
    r = np.linspace(0.01, 0.99, 51)
    assert oracle_auc(_truth(r, (r > np.median(r)).astype(int))) == 1.0
    with pytest.raises(DegenerateLabels):
        oracle_auc(_truth([0.1, 0.2], [0, 0]))


def test_write_corpus(tmp_path, small_corpus):
    files, truth = small_corpus
    cfg = GeneratorConfig(n_customers=1000, seed=42, shard_size=400)
    shards = write_corpus(tmp_path, files, truth, cfg)
    assert [p.rsplit("/", 1)[1] for p in shards] == ["shard-000.lnb", "shard-001.lnb", "shard-002.lnb"]
    text = "".join(open(p, encoding="ascii").read() for p in shards)
    assert text == "".join(serialize_customer(cf) for cf in files)
    assert parse_customers(text) == files
    back = read_truth(tmp_path / "truth.csv")
    assert back.customer_id == truth.customer_id and back.label == truth.label
    np.testing.assert_array_equal(back.risk, truth.risk)
    np.testing.assert_array_equal(back.features, truth.features)
    echo = json.loads((tmp_path / "config.json").read_text())
    assert echo["calibrated_intercept"] == truth.intercept
    assert GeneratorConfig.from_dict({k: v for k, v in echo.items() if k != "calibrated_intercept"}) == cfg


def test_scenarios_shift_recency_weight():
    d = GeneratorConfig().beta_vector
    t = GeneratorConfig(scenario="temporal-heavy").beta_vector
    rec = [FEATURES.index("inquiry_recency"), FEATURES.index("collection_recency")]
    assert np.all(t[rec] > d[rec])
    assert dataclasses.replace(GeneratorConfig(), beta={"utilization": 9.0}).beta_vector[3] == 9.0
