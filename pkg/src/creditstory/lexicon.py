"""
Domain vocabulary and greedy multi-word tokenizer for credit stories.

Multi-word rule-table phrases ("credit card", "thirty days past due") become
single tokens, written with underscores. Everything else is split into
words and punctuation; numerals (amounts, dates) collapse to ``[NUM]``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable

from .story import EMPTY_SENTENCE, RuleTable

EMPTY, NUM, UNK = "[EMPTY]", "[NUM]", "[UNK]"
SPECIALS = (EMPTY, NUM, UNK)

_WORD_RE = re.compile(r"[a-z0-9]+(?:[-.'][a-z0-9]+)*|[^\sa-z0-9]")
_NUMERAL_RE = re.compile(r"\d+(?:[.\-]\d+)*")
_PLACEHOLDER_RE = re.compile(r"\{\w+\}")


class UnknownToken(ValueError):
    pass


def split_words(text: str) -> list[str]:
    return _WORD_RE.findall(text)


def is_numeral(word: str) -> bool:
    return _NUMERAL_RE.fullmatch(word) is not None


def _is_punct(tok: str) -> bool:
    return len(tok) == 1 and not tok.isalnum()


def _phrase_key(p: str):
    return (-len(p.split()), p)


@dataclass(frozen=True)
class Vocabulary:
    domain_phrases: tuple = ()
    base_words: tuple = ()
    _index: dict = field(init=False, repr=False, compare=False)
    _by_first: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tokens)})
        by_first: dict[str, list] = {}
        for p in self.domain_phrases:
            words = tuple(p.split())
            by_first.setdefault(words[0], []).append(words)
        object.__setattr__(self, "_by_first", by_first)

    @property
    def tokens(self) -> tuple:
        return SPECIALS + tuple(p.replace(" ", "_") for p in self.domain_phrases) + self.base_words

    def __len__(self) -> int:
        return len(SPECIALS) + len(self.domain_phrases) + len(self.base_words)

    def id_of(self, token: str) -> int:
        return self._index.get(token, 2)

    def token(self, i: int) -> str:
        if not 0 <= i < len(self):
            raise UnknownToken(f"token id {i} outside vocabulary of size {len(self)}")
        return self.tokens[i]

    def save(self, path) -> None:
        lines = list(SPECIALS) + list(self.domain_phrases) + list(self.base_words)
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="ascii") as fh:
            lines = fh.read().splitlines()
        if tuple(lines[:3]) != SPECIALS:
            raise ValueError(f"{path}: vocabulary must start with {SPECIALS}")
        body = lines[3:]
        return cls(tuple(p for p in body if " " in p), tuple(w for w in body if " " not in w))

    def to_list(self) -> list[str]:
        return list(SPECIALS) + list(self.domain_phrases) + list(self.base_words)

    @classmethod
    def from_list(cls, items: list[str]) -> "Vocabulary":
        body = items[3:]
        return cls(tuple(p for p in body if " " in p), tuple(w for w in body if " " not in w))


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple
    token_strings: tuple

    def __len__(self) -> int:
        return len(self.tokens)


def _base_words(rules: RuleTable, corpus: Iterable[str]) -> tuple:
    words = set()
    for template in rules.templates.values():
        words.update(split_words(_PLACEHOLDER_RE.sub(" ", template)))
    for phrase in rules.phrase_values():
        words.update(split_words(phrase))
    for name in rules.segment_names.values():
        words.update(split_words(name))
    words.update(split_words(EMPTY_SENTENCE))
    for text in corpus:
        words.update(split_words(text))
    return tuple(sorted(w for w in words if not is_numeral(w)))


def extract_vocabulary(rules: RuleTable, corpus: Iterable[str] = ()) -> Vocabulary:
    """Domain phrases are the rule-table phrases of two or more words.

    Single words (from templates, phrases and the optional ``corpus`` of
    rendered stories) form the base vocabulary.
    """
    phrases = {p for p in rules.phrase_values() if len(p.split()) >= 2}
    return Vocabulary(tuple(sorted(phrases, key=_phrase_key)), _base_words(rules, corpus))


def base_vocabulary(rules: RuleTable, corpus: Iterable[str] = ()) -> Vocabulary:
    """Vocabulary without phrase merging: plain word/punctuation splitting."""
    return Vocabulary((), _base_words(rules, corpus))


def encode(text: str, v: Vocabulary) -> TokenSequence:
    words = split_words(text)
    if not words:
        return TokenSequence((0,), (EMPTY,))
    out = []
    i = 0
    while i < len(words):
        w = words[i]
        for cand in v._by_first.get(w, ()):
            k = len(cand)
            if tuple(words[i:i + k]) == cand:
                out.append("_".join(cand))
                i += k
                break
        else:
            out.append(NUM if is_numeral(w) else w)
            i += 1
    strings = tuple(t if t in v._index else UNK for t in out)
    return TokenSequence(tuple(v.id_of(t) for t in strings), strings)


def decode(ts: TokenSequence, v: Vocabulary | None = None) -> str:
    """Inverse of :func:`encode` up to spacing and ``[NUM]`` placeholders."""
    strings = ts.token_strings
    if v is not None:
        strings = tuple(v.token(i) for i in ts.tokens)
        if strings != tuple(ts.token_strings):
            raise UnknownToken("token ids disagree with token strings")
    if strings == (EMPTY,):
        return ""
    parts = []
    for tok in strings:
        if tok == EMPTY:
            raise UnknownToken("[EMPTY] inside a non-empty sequence")
        if _is_punct(tok) and parts:
            parts[-1] += tok
        else:
            parts.append(tok.replace("_", " ") if tok not in SPECIALS else tok)
    return " ".join(parts)


def mask_numerals(text: str) -> str:
    """The reference form decode(encode(text)) should reproduce."""
    out = []
    for w in split_words(text):
        tok = NUM if is_numeral(w) else w
        if _is_punct(tok) and out:
            out[-1] += tok
        else:
            out.append(tok)
    return " ".join(out)
