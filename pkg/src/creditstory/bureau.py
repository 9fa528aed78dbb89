"""
Fixed-width bureau record format (LNB): parsing, serialization, segmentation.

A customer block looks like::

    CUST00000000A00120180201
    TR01AC0000000000000001CC201702010200001234560000500000000010000000000000000000
    IN01BNKRBC20180115AL
    PF012018030N
    END0

One record per line, LF terminated, ASCII only. Every line starts with a
four character tag that fixes its width and field layout (see ``LAYOUTS``).
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import ClassVar, Iterator, Union

SEGMENT_TYPES = ("TR", "IN", "CL")

TRADE_TYPES = ("CC", "AL", "MG", "PL", "LC", "SL")
TRADE_STATUSES = ("01", "02", "03", "04", "05", "07", "08", "09")
COLLECTION_STATUSES = ("O", "P", "D")
PAY_CODES = ("0", "1", "2", "3", "X")
DPD_BUCKETS = ("0", "1", "2", "3")
CHARGEOFF_FLAGS = ("Y", "N")

_ALNUM = frozenset("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789")

# (field name, width, kind); kind is a code table, or one of
# "alnum", "date", "month", "cents", "pay".
LAYOUTS: dict[str, tuple[tuple[str, int, object], ...]] = {
    "CUST": (("customer_id", 12, "alnum"), ("run_date", 8, "date")),
    "TR01": (
        ("account_id", 18, "alnum"),
        ("type", 2, TRADE_TYPES),
        ("open_date", 8, "date"),
        ("status", 2, TRADE_STATUSES),
        ("balance", 10, "cents"),
        ("limit", 10, "cents"),
        ("pay_history", 24, "pay"),
    ),
    "IN01": (
        ("inquirer", 6, "alnum"),
        ("inquiry_date", 8, "date"),
        ("purpose", 2, TRADE_TYPES),
    ),
    "CL01": (
        ("agency", 6, "alnum"),
        ("assign_date", 8, "date"),
        ("amount", 10, "cents"),
        ("status", 1, COLLECTION_STATUSES),
    ),
    "PF01": (
        ("month", 6, "month"),
        ("dpd_bucket", 1, DPD_BUCKETS),
        ("chargeoff_flag", 1, CHARGEOFF_FLAGS),
    ),
    "END0": (),
}

LINE_WIDTHS = {tag: 4 + sum(w for _, w, _ in layout) for tag, layout in LAYOUTS.items()}


# --------------------------------------------------------------------------
# errors


class RecordError(ValueError):
    """Malformed bureau input. ``line`` is 1-based, ``offset`` is a byte offset."""

    kind = "RecordError"

    def __init__(self, message: str, line: int, offset: int):
        super().__init__(f"{self.kind} at line {line} (byte {offset}): {message}")
        self.message = message
        self.line = line
        self.offset = offset


class UnknownTag(RecordError):
    kind = "UnknownTag"


class WidthMismatch(RecordError):
    kind = "WidthMismatch"


class BadCode(RecordError):
    kind = "BadCode"


class BadDate(RecordError):
    kind = "BadDate"


class DateOrder(RecordError):
    kind = "DateOrder"


class MissingHeader(RecordError):
    kind = "MissingHeader"


class MissingTrailer(RecordError):
    kind = "MissingTrailer"


class UnexpectedRecord(RecordError):
    kind = "UnexpectedRecord"


class InvariantViolation(ValueError):
    """A record value that cannot be rendered at its fixed width."""


# --------------------------------------------------------------------------
# record types


@dataclass(frozen=True)
class Trade:
    account_id: str
    type: str
    open_date: dt.date
    status: str
    balance: int
    limit: int
    pay_history: str

    tag: ClassVar[str] = "TR01"
    segment: ClassVar[str] = "TR"
    kind: ClassVar[str] = "TRADE"

    @property
    def date(self) -> dt.date:
        return self.open_date


@dataclass(frozen=True)
class Inquiry:
    inquirer: str
    inquiry_date: dt.date
    purpose: str

    tag: ClassVar[str] = "IN01"
    segment: ClassVar[str] = "IN"
    kind: ClassVar[str] = "INQUIRY"

    @property
    def date(self) -> dt.date:
        return self.inquiry_date


@dataclass(frozen=True)
class Collection:
    agency: str
    assign_date: dt.date
    amount: int
    status: str

    tag: ClassVar[str] = "CL01"
    segment: ClassVar[str] = "CL"
    kind: ClassVar[str] = "COLLECTION"

    @property
    def date(self) -> dt.date:
        return self.assign_date


@dataclass(frozen=True)
class Performance:
    """One month of post-run-date performance; ``month`` is the first of the month."""

    month: dt.date
    dpd_bucket: str
    chargeoff_flag: str

    tag: ClassVar[str] = "PF01"
    segment: ClassVar[None] = None
    kind: ClassVar[str] = "PERFORMANCE"


RecordLine = Union[Trade, Inquiry, Collection, Performance]

RECORD_TYPES = {cls.tag: cls for cls in (Trade, Inquiry, Collection, Performance)}


@dataclass(frozen=True)
class CustomerFile:
    customer_id: str
    run_date: dt.date
    records: tuple = ()

    @property
    def performance(self) -> tuple[Performance, ...]:
        return tuple(r for r in self.records if isinstance(r, Performance))

    def entries(self, segment_type: str) -> tuple:
        return tuple(r for r in self.records if r.segment == segment_type)


@dataclass(frozen=True)
class Segment:
    segment_type: str
    entries: tuple = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.entries)


def month_index(d: dt.date) -> int:
    return d.year * 12 + d.month - 1


def add_months(d: dt.date, k: int) -> dt.date:
    """First day of the month ``k`` months after the month of ``d``."""
    m = month_index(d) + k
    return dt.date(m // 12, m % 12 + 1, 1)


# --------------------------------------------------------------------------
# parsing


def _parse_field(raw: str, kind: object, name: str, lineno: int, offset: int):
    if kind == "alnum":
        if not all(c in _ALNUM for c in raw):
            raise BadCode(f"{name}={raw!r} is not uppercase alphanumeric", lineno, offset)
        return raw
    if kind == "date":
        if not raw.isdigit():
            raise BadDate(f"{name}={raw!r} is not YYYYMMDD", lineno, offset)
        try:
            return dt.date(int(raw[:4]), int(raw[4:6]), int(raw[6:]))
        except ValueError:
            raise BadDate(f"{name}={raw!r} is not a calendar date", lineno, offset) from None
    if kind == "month":
        if not raw.isdigit() or not 1 <= int(raw[4:]) <= 12 or int(raw[:4]) < 1:
            raise BadDate(f"{name}={raw!r} is not YYYYMM", lineno, offset)
        return dt.date(int(raw[:4]), int(raw[4:]), 1)
    if kind == "cents":
        if not (raw.isascii() and raw.isdigit()):
            raise BadCode(f"{name}={raw!r} is not a zero-padded amount", lineno, offset)
        return int(raw)
    if kind == "pay":
        bad = [c for c in raw if c not in PAY_CODES]
        if bad:
            raise BadCode(f"{name} contains {bad[0]!r}", lineno, offset)
        return raw
    if raw not in kind:
        raise BadCode(f"{name}={raw!r} not in code table", lineno, offset)
    return raw


def _parse_line(line: str, lineno: int, offset: int) -> tuple[str, dict]:
    tag = line[:4]
    if tag not in LAYOUTS:
        raise UnknownTag(f"tag {tag!r}", lineno, offset)
    if len(line) != LINE_WIDTHS[tag]:
        raise WidthMismatch(
            f"{tag} line has {len(line)} characters, expected {LINE_WIDTHS[tag]}",
            lineno, offset,
        )
    if not line.isascii():
        col = next(i for i, c in enumerate(line) if ord(c) > 127)
        raise BadCode("non-ASCII character", lineno, offset + col)
    values = {}
    pos = 4
    for name, width, kind in LAYOUTS[tag]:
        values[name] = _parse_field(line[pos:pos + width], kind, name, lineno, offset + pos)
        pos += width
    return tag, values


def _split_lines(text: str, first_line: int = 1, first_offset: int = 0):
    """Yield (line, lineno, byte offset); a final LF does not start a new line."""
    lines = text.split("\n")
    if text.endswith("\n"):
        lines.pop()
    offset = first_offset
    for i, line in enumerate(lines):
        yield line, first_line + i, offset
        offset += len(line) + 1


def _parse_block(lines: list) -> CustomerFile:
    if not lines:
        raise MissingHeader("empty input", 1, 0)
    head, lineno, offset = lines[0]
    tag, values = _parse_line(head, lineno, offset)
    if tag != "CUST":
        raise MissingHeader(f"block starts with {tag}", lineno, offset)
    customer_id, run_date = values["customer_id"], values["run_date"]
    run_month = month_index(run_date)

    records = []
    closed = False
    for line, lineno, offset in lines[1:]:
        if closed:
            raise UnexpectedRecord("data after END0 trailer", lineno, offset)
        tag, values = _parse_line(line, lineno, offset)
        if tag == "CUST":
            raise UnexpectedRecord("second CUST header in block", lineno, offset)
        if tag == "END0":
            closed = True
            continue
        rec = RECORD_TYPES[tag](**values)
        if isinstance(rec, Performance):
            if month_index(rec.month) <= run_month:
                raise DateOrder("performance month not after run date", lineno, offset)
        elif rec.date > run_date:
            raise DateOrder(f"{tag} date after run date", lineno, offset)
        records.append(rec)
    if not closed:
        last_line, last_no, last_off = lines[-1]
        raise MissingTrailer("block has no END0 trailer", last_no, last_off + len(last_line))
    return CustomerFile(customer_id, run_date, tuple(records))


def parse_customer(text: str) -> CustomerFile:
    """Parse one customer block (CUST ... END0).

    Raises a :class:`RecordError` subclass carrying line number and byte
    offset for every malformed input.
    """
    return _parse_block(list(_split_lines(text)))


def iter_blocks(text: str) -> Iterator[list]:
    """Split a multi-customer file into per-block line lists, cut after each END0."""
    block = []
    for item in _split_lines(text):
        block.append(item)
        if item[0] == "END0":
            yield block
            block = []
    if block:
        yield block


def parse_customers(text: str) -> list[CustomerFile]:
    return [_parse_block(block) for block in iter_blocks(text)]


# --------------------------------------------------------------------------
# serialization


def _render_field(value, width: int, kind: object, name: str) -> str:
    if kind == "date":
        out = f"{value.year:04d}{value.month:02d}{value.day:02d}"
    elif kind == "month":
        out = f"{value.year:04d}{value.month:02d}"
    elif kind == "cents":
        if not isinstance(value, int) or value < 0:
            raise InvariantViolation(f"{name}={value!r} is not a non-negative integer")
        out = f"{value:0{width}d}"
    else:
        out = str(value)
        if kind == "alnum" and not all(c in _ALNUM for c in out):
            raise InvariantViolation(f"{name}={value!r} is not uppercase alphanumeric")
        if kind == "pay" and any(c not in PAY_CODES for c in out):
            raise InvariantViolation(f"{name}={value!r} has codes outside {PAY_CODES}")
        if isinstance(kind, tuple) and out not in kind:
            raise InvariantViolation(f"{name}={value!r} not in code table")
    if len(out) != width:
        raise InvariantViolation(f"{name}={value!r} does not fit width {width}")
    return out


def _render_line(tag: str, values: dict) -> str:
    parts = [tag]
    for name, width, kind in LAYOUTS[tag]:
        parts.append(_render_field(values[name], width, kind, name))
    return "".join(parts)


def record_values(rec: RecordLine) -> dict:
    return {name: getattr(rec, name) for name, _, _ in LAYOUTS[rec.tag]}


def serialize_customer(cf: CustomerFile) -> str:
    lines = [_render_line("CUST", {"customer_id": cf.customer_id, "run_date": cf.run_date})]
    lines += [_render_line(rec.tag, record_values(rec)) for rec in cf.records]
    lines.append("END0")
    return "\n".join(lines) + "\n"


def serialize_customers(files) -> str:
    return "".join(serialize_customer(cf) for cf in files)


# --------------------------------------------------------------------------
# segmentation


def segment_customer(cf: CustomerFile) -> dict[str, Segment]:
    """Group TR/IN/CL records into segments; PF lines are left out."""
    return {s: Segment(s, cf.entries(s)) for s in SEGMENT_TYPES}


# --------------------------------------------------------------------------
# JSON form


def _json_value(value):
    if isinstance(value, dt.date):
        return value.isoformat()
    return value


def customer_to_dict(cf: CustomerFile) -> dict:
    records = []
    for rec in cf.records:
        row = {"tag": rec.tag}
        for name, value in record_values(rec).items():
            row[name] = value.strftime("%Y-%m") if name == "month" else _json_value(value)
        records.append(row)
    return {
        "customer_id": cf.customer_id,
        "run_date": cf.run_date.isoformat(),
        "records": records,
    }


def customer_from_dict(obj: dict) -> CustomerFile:
    records = []
    for row in obj["records"]:
        tag = row["tag"]
        values = {}
        for name, _, kind in LAYOUTS[tag]:
            v = row[name]
            if kind == "date":
                v = dt.date.fromisoformat(v)
            elif kind == "month":
                v = dt.date.fromisoformat(v + "-01")
            values[name] = v
        records.append(RECORD_TYPES[tag](**values))
    return CustomerFile(obj["customer_id"], dt.date.fromisoformat(obj["run_date"]), tuple(records))
