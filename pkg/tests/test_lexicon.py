import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from creditstory.labeling import build_example
from creditstory.lexicon import (
    SPECIALS,
    TokenSequence,
    UnknownToken,
    Vocabulary,
    base_vocabulary,
    decode,
    encode,
    extract_vocabulary,
    mask_numerals,
)
from creditstory.story import DEFAULT_RULES, RuleTable


def toy_rules(phrases):
    return RuleTable(phrases={("TR", "x", str(i)): p for i, p in enumerate(phrases)}, templates={},
                     segment_names={})


def test_domain_phrases_two_or_more_words():
    v = extract_vocabulary(toy_rules(["credit card", "auto loan", "current"]))
    assert set(v.domain_phrases) == {"credit card", "auto loan"}


def test_empty_rule_table():
    assert extract_vocabulary(toy_rules([])).domain_phrases == ()


def test_duplicate_phrase_once():
    rules = RuleTable(phrases={("TR", "type", "CC"): "credit card", ("IN", "purpose", "CC"): "credit card"},
                      templates={}, segment_names={})
    assert extract_vocabulary(rules).domain_phrases == ("credit card",)


def test_phrase_order_longest_first():
    v = extract_vocabulary(DEFAULT_RULES)
    keys = [(-len(p.split()), p) for p in v.domain_phrases]
    assert keys == sorted(keys)
    assert v.domain_phrases[0] == "one hundred twenty plus days past due"


def test_encode_examples():
    v = extract_vocabulary(toy_rules(["credit card", "auto loan", "current"]), ["account opened balance of limit"])
    assert encode("credit card account opened", v).token_strings == ("credit_card", "account", "opened")
    assert encode("balance 1234.56 of limit 5000.00", v).token_strings == ("balance", "[NUM]", "of", "limit", "[NUM]")
    assert encode("", v).token_strings == ("[EMPTY]",)
    assert encode("", v).tokens == (0,)


def test_special_ids():
    v = extract_vocabulary(DEFAULT_RULES)
    assert [v.id_of(t) for t in SPECIALS] == [0, 1, 2]
    ts = encode("zebra", v)
    assert ts.tokens == (2,) and ts.token_strings == ("[UNK]",)


def test_decode_examples():
    v = extract_vocabulary(DEFAULT_RULES)
    ts = TokenSequence((v.id_of("credit_card"), v.id_of("account")), ("credit_card", "account"))
    assert decode(ts) == "credit card account"
    assert decode(ts, v) == "credit card account"
    assert decode(TokenSequence((0,), ("[EMPTY]",))) == ""


def test_decode_rejects_bad_ids():
    v = extract_vocabulary(DEFAULT_RULES)
    with pytest.raises(UnknownToken):
        decode(TokenSequence((len(v) + 5,), ("x",)), v)


def test_every_rule_phrase_single_token():
    v = extract_vocabulary(DEFAULT_RULES)
    for phrase in DEFAULT_RULES.phrase_values():
        ts = encode(phrase, v)
        assert len(ts) == 1, phrase
        assert ts.token_strings[0] != "[UNK]"


def test_story_round_trip_and_token_counts(small_corpus):
    files, _ = small_corpus
    texts = [t for cf in files[:400] for t in build_example(cf).stories.values()]
    dom = extract_vocabulary(DEFAULT_RULES, texts)
    base = base_vocabulary(DEFAULT_RULES, texts)
    for text in texts:
        d = encode(text, dom)
        assert decode(d, dom) == mask_numerals(text)
        assert "[UNK]" not in d.token_strings
        assert len(d) <= len(encode(text, base))


def test_save_load(tmp_path):
    v = extract_vocabulary(DEFAULT_RULES, ["trade: credit card account opened"])
    path = tmp_path / "vocab.txt"
    v.save(path)
    lines = path.read_text().splitlines()
    assert lines[:3] == list(SPECIALS)
    w = Vocabulary.load(path)
    assert w.tokens == v.tokens
    assert Vocabulary.from_list(v.to_list()).tokens == v.tokens


_words = st.lists(st.sampled_from(["credit", "card", "auto", "loan", "past", "due", "days", "thirty", "12.50", ";",
                                   ",", "status", "2017-02-01", "on-time"]), max_size=30)


@settings(max_examples=200, deadline=None)
@given(_words)
def test_property_deterministic_and_round_trip(words):
    text = " ".join(words)
    v = extract_vocabulary(DEFAULT_RULES, [text])
    a, b = encode(text, v), encode(text, v)
    assert a == b
    assert decode(a) == mask_numerals(text)
