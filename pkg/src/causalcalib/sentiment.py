"""Scalar sentiment scores and their per-day aggregation.

A record's score is the signed combination -1*p_neg + 0*p_neu + 1*p_pos,
always in [-1, 1]. A day's aggregate is the plain average of the scores of
all news on that day; days without news produce no row at all (downstream
joins treat them as missing, not neutral).
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .ingest import SentimentRecord, _parse_date, _parse_float


@dataclass(frozen=True)
class DailySentiment:
    date: dt.date
    score: float
    count: int


def record_score(record: SentimentRecord) -> float:
    """Signed scalar score of one probability triple."""
    return -1.0 * record.p_neg + 0.0 * record.p_neu + 1.0 * record.p_pos


def aggregate_daily(records: Sequence[SentimentRecord]) -> list[DailySentiment]:
    """Average the record scores per calendar date, sorted by date.

    Uses exact summation so the result is independent of record order.
    """
    by_day: dict[dt.date, list[float]] = defaultdict(list)
    for rec in records:
        by_day[rec.date].append(record_score(rec))
    return [
        DailySentiment(date=d, score=math.fsum(scores) / len(scores), count=len(scores))
        for d, scores in sorted(by_day.items())
    ]


def write_daily_csv(path: str | Path, rows: Sequence[DailySentiment]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "score", "count"])
        for r in rows:
            writer.writerow([r.date.isoformat(), repr(float(r.score)), r.count])


def read_daily_csv(path: str | Path) -> list[DailySentiment]:
    from .ingest import _read_csv_rows

    out: list[DailySentiment] = []
    for line, row in _read_csv_rows(path, ["date", "score", "count"]):
        out.append(
            DailySentiment(
                date=_parse_date(row["date"], line),
                score=_parse_float(row["score"], "score", line),
                count=int(_parse_float(row["count"], "count", line)),
            )
        )
    return out
