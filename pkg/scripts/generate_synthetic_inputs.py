#!/usr/bin/env python3
"""Generate a synthetic-but-realistic input set for the CLI pipeline.

Writes into the output directory:

* prices.csv    - daily OHLCV over weekdays; return noise is scaled by the
                  previous day's news sentiment, so sentiment genuinely
                  drives volatility in this toy market
* news.csv      - per-news probability triples, including weekend items
* calendar.csv  - the weekday trading calendar
* corpus.jsonl  - 4-class keyword corpus with 20% label noise
"""

import argparse
import datetime as dt
import math
from pathlib import Path

from causalcalib.ingest import PriceBar, SentimentRecord, write_corpus_jsonl, write_price_csv
from causalcalib.rng import CounterRng
from causalcalib.synth import gen_keyword_corpus


def weekdays(start: dt.date, count: int) -> list[dt.date]:
    days = []
    d = start
    while len(days) < count:
        if d.weekday() < 5:
            days.append(d)
        d += dt.timedelta(days=1)
    return days


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--days", type=int, default=400, help="number of trading days")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = CounterRng(args.seed)

    cal = weekdays(dt.date(2022, 1, 3), args.days)
    all_days = [cal[0] + dt.timedelta(days=i) for i in range((cal[-1] - cal[0]).days + 1)]

    # Daily sentiment state drives next-day return dispersion.
    news_rows: list[SentimentRecord] = []
    day_score: dict[dt.date, float] = {}
    for d in all_days:
        n_news = 1 + rng.integers(3)
        scores = []
        for _ in range(n_news):
            s = math.tanh(rng.normal())  # signed score in (-1, 1)
            p_pos = (1.0 + s) / 2.0 * 0.9
            p_neg = (1.0 - s) / 2.0 * 0.9
            p_neu = 1.0 - p_pos - p_neg
            news_rows.append(SentimentRecord(date=d, p_neg=p_neg, p_neu=p_neu, p_pos=p_pos))
            scores.append(p_pos - p_neg)
        day_score[d] = sum(scores) / len(scores)

    bars: list[PriceBar] = []
    close = 100.0
    prev_score = 0.0
    for d in cal:
        sigma = 0.006 * (1.0 + 1.5 * abs(prev_score))
        ret = sigma * rng.normal()
        new_close = close * math.exp(ret)
        open_ = close
        spread = abs(rng.normal()) * 0.003 + 0.0005
        high = max(open_, new_close) * (1.0 + spread)
        low = min(open_, new_close) * (1.0 - spread)
        volume = float(1_000_000 + rng.integers(500_000))
        bars.append(PriceBar(date=d, open=open_, high=high, low=low, close=new_close, volume=volume))
        close = new_close
        prev_score = day_score.get(d, prev_score)
    write_price_csv(out / "prices.csv", bars)

    with open(out / "calendar.csv", "w", encoding="utf-8") as fh:
        fh.write("date\n")
        for d in cal:
            fh.write(d.isoformat() + "\n")

    with open(out / "news.csv", "w", encoding="utf-8") as fh:
        fh.write("date,p_neg,p_neu,p_pos\n")
        for rec in news_rows:
            fh.write(f"{rec.date.isoformat()},{rec.p_neg!r},{rec.p_neu!r},{rec.p_pos!r}\n")

    corpus = gen_keyword_corpus(
        n_classes=4,
        keywords_per_class=20,
        docs_per_class=500,
        doc_len=20,
        label_noise_rate=0.2,
        seed=args.seed,
    )
    write_corpus_jsonl(out / "corpus.jsonl", corpus)
    print(f"wrote prices.csv, news.csv, calendar.csv, corpus.jsonl to {out}")


if __name__ == "__main__":
    main()
