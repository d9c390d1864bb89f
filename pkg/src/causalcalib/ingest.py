"""Readers, writers, and validation for all external data files.

Schemas (UTF-8, comma separator, ``.`` decimal point, mandatory header):

* price CSV        ``date,open,high,low,close,volume``
* sentiment file   CSV ``date,p_neg,p_neu,p_pos[,text]`` or JSONL with the
                   same keys
* calendar CSV     ``date`` (one trading day per row, strictly increasing)
* series CSV       ``date,value`` (generic dated series)
* corpus JSONL     ``{"label": ..., "text": ...}`` per line

Dates are ISO-8601 text throughout; the toolkit works at daily granularity
and carries no timezones. All readers reject rows with empty numeric fields
rather than imputing them.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime as dt
import json
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence, TypeVar

from .errors import InputError

DatedSeries = list[tuple[dt.date, float]]

PROB_SUM_TOL = 1e-3


@dataclass(frozen=True)
class PriceBar:
    """One trading day of OHLCV data."""

    date: dt.date
    open: float
    high: float
    low: float
    close: float
    volume: float

    def validate(self, line: int | None = None) -> None:
        where = f" (line {line})" if line is not None else ""
        for name in ("open", "high", "low", "close"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InputError(f"non-finite {name}{where}")
            if v <= 0:
                raise InputError(f"non-positive {name}{where}")
        if not math.isfinite(self.volume) or self.volume < 0:
            raise InputError(f"non-negative volume violated{where}")
        if self.low > min(self.open, self.close):
            raise InputError(f"low above open/close{where}")
        if self.high < max(self.open, self.close):
            raise InputError(f"high below open/close{where}")


@dataclass(frozen=True)
class SentimentRecord:
    """One news item's class-probability triple; text is informational."""

    date: dt.date
    p_neg: float
    p_neu: float
    p_pos: float
    text: str | None = None

    def validate(self, line: int | None = None) -> None:
        where = f" (line {line})" if line is not None else ""
        for name in ("p_neg", "p_neu", "p_pos"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0.0 or v > 1.0:
                raise InputError(f"probability {name} outside [0, 1]{where}")
        total = self.p_neg + self.p_neu + self.p_pos
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise InputError(f"probabilities do not sum to 1{where}: sum={total!r}")


@dataclass(frozen=True)
class LabeledDoc:
    """A text document with its class label."""

    label: str
    text: str


class AlignmentPolicy(Enum):
    """How to map an off-calendar event date onto a trading day."""

    NEXT_TRADING_DAY = "next"
    PREVIOUS_TRADING_DAY = "prev"
    DROP = "drop"


def _parse_date(text: str, line: int) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError as exc:
        raise InputError(f"malformed date {text!r} (line {line})") from exc


def _parse_float(text: str, field: str, line: int) -> float:
    text = text.strip()
    if not text:
        raise InputError(f"empty {field} field (line {line})")
    try:
        value = float(text)
    except ValueError as exc:
        raise InputError(f"malformed {field} {text!r} (line {line})") from exc
    if not math.isfinite(value):
        raise InputError(f"non-finite {field} (line {line})")
    return value


def _read_csv_rows(path: str | Path, expected: list[str], optional: list[str] | None = None):
    """Yield (line_number, row_dict); validates the header up front."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"empty file, missing header: {path}") from None
        header = [h.strip() for h in header]
        allowed = expected + (optional or [])
        if header[: len(expected)] != expected or any(h not in allowed for h in header):
            raise InputError(
                f"bad header in {path}: expected {','.join(expected)}"
                f"{'[,' + ','.join(optional) + ']' if optional else ''}, got {','.join(header)}"
            )
        for line, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < len(expected):
                raise InputError(f"malformed row, too few fields (line {line}) in {path}")
            yield line, dict(zip(header, row))


def read_price_csv(path: str | Path) -> list[PriceBar]:
    """Parse an OHLCV file; rows must be strictly increasing by date."""
    bars: list[PriceBar] = []
    for line, row in _read_csv_rows(path, ["date", "open", "high", "low", "close", "volume"]):
        bar = PriceBar(
            date=_parse_date(row["date"], line),
            open=_parse_float(row["open"], "open", line),
            high=_parse_float(row["high"], "high", line),
            low=_parse_float(row["low"], "low", line),
            close=_parse_float(row["close"], "close", line),
            volume=_parse_float(row["volume"], "volume", line),
        )
        bar.validate(line)
        if bars:
            if bar.date == bars[-1].date:
                raise InputError(f"duplicate date {bar.date} (line {line})")
            if bar.date < bars[-1].date:
                raise InputError(f"non-monotone date {bar.date} (line {line})")
        bars.append(bar)
    return bars


def write_price_csv(path: str | Path, bars: Sequence[PriceBar]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "open", "high", "low", "close", "volume"])
        for b in bars:
            writer.writerow(
                [b.date.isoformat()] + [repr(float(v)) for v in (b.open, b.high, b.low, b.close, b.volume)]
            )


def read_sentiment_file(path: str | Path) -> list[SentimentRecord]:
    """Parse sentiment probability triples from CSV or JSONL."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    if first.lstrip().startswith("{"):
        return _read_sentiment_jsonl(path)
    records: list[SentimentRecord] = []
    for line, row in _read_csv_rows(path, ["date", "p_neg", "p_neu", "p_pos"], optional=["text"]):
        rec = SentimentRecord(
            date=_parse_date(row["date"], line),
            p_neg=_parse_float(row["p_neg"], "p_neg", line),
            p_neu=_parse_float(row["p_neu"], "p_neu", line),
            p_pos=_parse_float(row["p_pos"], "p_pos", line),
            text=row.get("text") or None,
        )
        rec.validate(line)
        records.append(rec)
    return records


def _read_sentiment_jsonl(path: Path) -> list[SentimentRecord]:
    records: list[SentimentRecord] = []
    with open(path, encoding="utf-8") as fh:
        for line, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise InputError(f"malformed JSON (line {line}) in {path}") from exc
            missing = {"date", "p_neg", "p_neu", "p_pos"} - obj.keys()
            if missing:
                raise InputError(f"missing keys {sorted(missing)} (line {line}) in {path}")
            rec = SentimentRecord(
                date=_parse_date(str(obj["date"]), line),
                p_neg=float(obj["p_neg"]),
                p_neu=float(obj["p_neu"]),
                p_pos=float(obj["p_pos"]),
                text=obj.get("text"),
            )
            rec.validate(line)
            records.append(rec)
    return records


def read_calendar_csv(path: str | Path) -> list[dt.date]:
    """Trading-day calendar: one ``date`` column, strictly increasing."""
    days: list[dt.date] = []
    for line, row in _read_csv_rows(path, ["date"]):
        d = _parse_date(row["date"], line)
        if days and d <= days[-1]:
            raise InputError(f"calendar dates must be strictly increasing (line {line})")
        days.append(d)
    return days


def read_series_csv(path: str | Path) -> DatedSeries:
    """Generic dated series with header ``date,value``."""
    out: DatedSeries = []
    for line, row in _read_csv_rows(path, ["date", "value"]):
        out.append((_parse_date(row["date"], line), _parse_float(row["value"], "value", line)))
    return out


def write_series_csv(path: str | Path, series: DatedSeries) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "value"])
        for d, v in series:
            writer.writerow([d.isoformat(), repr(float(v))])


def read_dated_column(path: str | Path, column: str | None = None) -> DatedSeries:
    """Pull one named numeric column out of any dated CSV.

    With ``column=None`` the file must have exactly one column besides
    ``date``. Rows where the chosen column is empty (warm-up blanks) are
    skipped.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"empty file, missing header: {path}") from None
        if "date" not in header:
            raise InputError(f"no date column in {path}")
        candidates = [h for h in header if h != "date"]
        if column is None:
            if len(candidates) != 1:
                raise InputError(
                    f"{path} has columns {candidates}; pick one explicitly"
                )
            column = candidates[0]
        if column not in header:
            raise InputError(f"column {column!r} not in {path} (has {candidates})")
        d_idx = header.index("date")
        v_idx = header.index(column)
        out: DatedSeries = []
        for line, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) <= max(d_idx, v_idx):
                raise InputError(f"malformed row, too few fields (line {line}) in {path}")
            if not row[v_idx].strip():
                continue
            out.append((_parse_date(row[d_idx], line), _parse_float(row[v_idx], column, line)))
    return out


def read_corpus_jsonl(path: str | Path) -> list[LabeledDoc]:
    """Labeled text corpus, one ``{"label", "text"}`` object per line."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    docs: list[LabeledDoc] = []
    with open(path, encoding="utf-8") as fh:
        for line, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise InputError(f"malformed JSON (line {line}) in {path}") from exc
            if "label" not in obj or "text" not in obj:
                raise InputError(f"missing label/text keys (line {line}) in {path}")
            docs.append(LabeledDoc(label=str(obj["label"]), text=str(obj["text"])))
    return docs


def write_corpus_jsonl(path: str | Path, docs: Iterable[LabeledDoc]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps({"label": doc.label, "text": doc.text}) + "\n")


R = TypeVar("R")


def align_dates(events: Sequence[R], calendar: Sequence[dt.date], policy: AlignmentPolicy) -> list[R]:
    """Map each event's date onto the trading calendar.

    Events already on a trading day pass through unchanged. Off-calendar
    events move to the next (or previous) trading day, or are dropped,
    according to the policy. Idempotent: output dates are always calendar
    members.
    """
    cal = list(calendar)
    if any(b <= a for a, b in zip(cal, cal[1:])):
        raise InputError("calendar must be strictly increasing")
    members = set(cal)
    out: list[R] = []
    for ev in events:
        d = ev.date  # type: ignore[attr-defined]
        if d in members:
            out.append(ev)
            continue
        if policy is AlignmentPolicy.DROP:
            continue
        if policy is AlignmentPolicy.NEXT_TRADING_DAY:
            idx = bisect_left(cal, d)
            if idx >= len(cal):
                raise InputError(f"event on {d} is after the last calendar date")
            out.append(dataclasses.replace(ev, date=cal[idx]))  # type: ignore[type-var]
        else:
            idx = bisect_right(cal, d) - 1
            if idx < 0:
                raise InputError(f"event on {d} is before the first calendar date")
            out.append(dataclasses.replace(ev, date=cal[idx]))  # type: ignore[type-var]
    return out
