"""Render coded bureau segments as plain-English credit stories."""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field
from typing import Mapping

from .bureau import (
    SEGMENT_TYPES,
    Collection,
    CustomerFile,
    Inquiry,
    Segment,
    Trade,
    segment_customer,
)

TYPE_PHRASES = {
    "CC": "credit card",
    "AL": "auto loan",
    "MG": "mortgage",
    "PL": "personal loan",
    "LC": "line of credit",
    "SL": "student loan",
}

STATUS_PHRASES = {
    "01": "current",
    "02": "thirty days past due",
    "03": "sixty days past due",
    "04": "ninety days past due",
    "05": "one hundred twenty plus days past due",
    "07": "charged off",
    "08": "in collection",
    "09": "closed",
}

PAY_PHRASES = {
    "0": "on-time",
    "1": "thirty-day late",
    "2": "sixty-day late",
    "3": "ninety-day late",
    "X": "not reported",
}

COLLECTION_PHRASES = {"O": "open", "P": "paid", "D": "disputed"}

DEFAULT_PHRASES = {
    **{("TR", "type", k): v for k, v in TYPE_PHRASES.items()},
    **{("TR", "status", k): v for k, v in STATUS_PHRASES.items()},
    **{("TR", "pay_history", k): v for k, v in PAY_PHRASES.items()},
    **{("IN", "purpose", k): v for k, v in TYPE_PHRASES.items()},
    **{("CL", "status", k): v for k, v in COLLECTION_PHRASES.items()},
}

DEFAULT_TEMPLATES = {
    "TR": (
        "trade: {type} account opened on {date}, status {status}, "
        "balance {balance} of limit {limit}, payment history {history}"
    ),
    "IN": "inquiry: {purpose} inquiry on {date} by {inquirer}",
    "CL": "collection: {status} collection of {amount} assigned on {date} by {agency}",
}

SEGMENT_NAMES = {"TR": "trades", "IN": "inquiries", "CL": "collections"}

ENTRY_SEPARATOR = "; "
EMPTY_SENTENCE = "no records"


class UnknownCode(KeyError):
    pass


@dataclass(frozen=True)
class RuleTable:
    """Code-to-phrase mapping keyed by (segment, field, code), plus one template per segment."""

    phrases: Mapping[tuple, str] = field(default_factory=lambda: dict(DEFAULT_PHRASES))
    templates: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_TEMPLATES))
    segment_names: Mapping[str, str] = field(default_factory=lambda: dict(SEGMENT_NAMES))

    def phrase(self, segment: str, name: str, code: str) -> str:
        try:
            return self.phrases[(segment, name, code)]
        except KeyError:
            raise UnknownCode(f"no phrase for {segment}.{name}={code!r}") from None

    def phrase_values(self) -> set[str]:
        return set(self.phrases.values())


DEFAULT_RULES = RuleTable()


@dataclass(frozen=True)
class CreditStory:
    segment_type: str
    text: str


def format_money(cents: int) -> str:
    return f"{cents // 100}.{cents % 100:02d}"


def summarize_history(history: str, rules: RuleTable) -> str:
    """Counts per lateness class in code order, e.g. ``23 on-time and 1 thirty-day late``."""
    parts = []
    for code in sorted(set(history), key="0123X".index):
        parts.append(f"{history.count(code)} {rules.phrase('TR', 'pay_history', code)}")
    return " and ".join(parts)


def render_entry(rec, rules: RuleTable) -> str:
    if isinstance(rec, Trade):
        return rules.templates["TR"].format(
            type=rules.phrase("TR", "type", rec.type),
            date=rec.open_date.isoformat(),
            status=rules.phrase("TR", "status", rec.status),
            balance=format_money(rec.balance),
            limit=format_money(rec.limit),
            history=summarize_history(rec.pay_history, rules),
        )
    if isinstance(rec, Inquiry):
        return rules.templates["IN"].format(
            purpose=rules.phrase("IN", "purpose", rec.purpose),
            date=rec.inquiry_date.isoformat(),
            inquirer=rec.inquirer.lower(),
        )
    if isinstance(rec, Collection):
        return rules.templates["CL"].format(
            status=rules.phrase("CL", "status", rec.status),
            amount=format_money(rec.amount),
            date=rec.assign_date.isoformat(),
            agency=rec.agency.lower(),
        )
    raise TypeError(f"cannot render {type(rec).__name__}")


def render_segment(seg: Segment, rules: RuleTable = DEFAULT_RULES,
                   run_date: dt.date | None = None) -> CreditStory:
    # run_date is accepted for interface symmetry; rendered dates are absolute.
    if not seg.entries:
        name = rules.segment_names[seg.segment_type]
        return CreditStory(seg.segment_type, f"{name}: {EMPTY_SENTENCE}")
    text = ENTRY_SEPARATOR.join(render_entry(rec, rules) for rec in seg.entries)
    return CreditStory(seg.segment_type, text)


def render_customer(cf: CustomerFile, rules: RuleTable = DEFAULT_RULES) -> dict[str, CreditStory]:
    segments = segment_customer(cf)
    return {s: render_segment(segments[s], rules, cf.run_date) for s in SEGMENT_TYPES}


def story_record(cf: CustomerFile, rules: RuleTable = DEFAULT_RULES) -> dict:
    stories = render_customer(cf, rules)
    return {
        "customer_id": cf.customer_id,
        "tr_story": stories["TR"].text,
        "in_story": stories["IN"].text,
        "cl_story": stories["CL"].text,
    }


def dumps_stories(files, rules: RuleTable = DEFAULT_RULES) -> str:
    return "".join(json.dumps(story_record(cf, rules)) + "\n" for cf in files)
