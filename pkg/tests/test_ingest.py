import datetime as dt

import pytest
from hypothesis import given
from hypothesis import strategies as st

from causalcalib.errors import InputError
from causalcalib.ingest import (
    AlignmentPolicy,
    PriceBar,
    SentimentRecord,
    align_dates,
    read_corpus_jsonl,
    read_dated_column,
    read_price_csv,
    read_sentiment_file,
    read_series_csv,
    write_price_csv,
)

PRICE_HEADER = "date,open,high,low,close,volume\n"


class TestReadPriceCsv:
    def test_single_valid_row(self, tmp_csv):
        path = tmp_csv("p.csv", PRICE_HEADER + "2023-05-03,170.0,171.0,169.5,170.5,1000\n")
        bars = read_price_csv(path)
        assert len(bars) == 1
        assert bars[0].close == 170.5
        assert bars[0].date == dt.date(2023, 5, 3)

    def test_empty_after_header(self, tmp_csv):
        assert read_price_csv(tmp_csv("p.csv", PRICE_HEADER)) == []

    def test_negative_volume_rejected(self, tmp_csv):
        path = tmp_csv("p.csv", PRICE_HEADER + "2023-05-03,170.0,171.0,169.5,170.5,-1\n")
        with pytest.raises(InputError, match="non-negative volume"):
            read_price_csv(path)

    def test_malformed_row_reports_line(self, tmp_csv):
        path = tmp_csv(
            "p.csv",
            PRICE_HEADER
            + "2023-05-03,170.0,171.0,169.5,170.5,1000\n2023-05-04,oops,171.0,169.5,170.5,1000\n",
        )
        with pytest.raises(InputError, match="line 3"):
            read_price_csv(path)

    def test_duplicate_date_rejected(self, tmp_csv):
        row = "2023-05-03,170.0,171.0,169.5,170.5,1000\n"
        with pytest.raises(InputError, match="duplicate date"):
            read_price_csv(tmp_csv("p.csv", PRICE_HEADER + row + row))

    def test_non_monotone_date_rejected(self, tmp_csv):
        text = (
            PRICE_HEADER
            + "2023-05-04,170.0,171.0,169.5,170.5,1000\n"
            + "2023-05-03,170.0,171.0,169.5,170.5,1000\n"
        )
        with pytest.raises(InputError, match="non-monotone"):
            read_price_csv(tmp_csv("p.csv", text))

    def test_low_high_invariants(self, tmp_csv):
        with pytest.raises(InputError, match="low above"):
            read_price_csv(tmp_csv("p.csv", PRICE_HEADER + "2023-05-03,170.0,171.0,170.5,170.2,1\n"))
        with pytest.raises(InputError, match="high below"):
            read_price_csv(tmp_csv("p.csv", PRICE_HEADER + "2023-05-03,170.0,169.9,169.0,169.5,1\n"))

    def test_empty_numeric_field_rejected(self, tmp_csv):
        with pytest.raises(InputError, match="empty close"):
            read_price_csv(tmp_csv("p.csv", PRICE_HEADER + "2023-05-03,170.0,171.0,169.5,,1000\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError, match="not found"):
            read_price_csv(tmp_path / "nope.csv")

    def test_bad_header(self, tmp_csv):
        with pytest.raises(InputError, match="bad header"):
            read_price_csv(tmp_csv("p.csv", "open,close\n"))


@given(
    st.lists(
        st.tuples(
            st.floats(min_value=0.01, max_value=1e6, allow_nan=False),
            st.floats(min_value=0.01, max_value=1e6, allow_nan=False),
            st.floats(min_value=0.0, max_value=0.2, allow_nan=False),
            st.integers(min_value=0, max_value=10**9),
        ),
        min_size=1,
        max_size=30,
    )
)
def test_price_roundtrip_is_bit_exact(tmp_path_factory, rows):
    bars = []
    day = dt.date(2020, 1, 1)
    for open_, close, spread, volume in rows:
        high = max(open_, close) * (1.0 + spread)
        low = min(open_, close) * (1.0 - spread * 0.5)
        bars.append(
            PriceBar(date=day, open=open_, high=high, low=low, close=close, volume=float(volume))
        )
        day += dt.timedelta(days=1)
    path = tmp_path_factory.mktemp("roundtrip") / "p.csv"
    write_price_csv(path, bars)
    assert read_price_csv(path) == bars


class TestReadSentimentFile:
    def test_paper_style_row(self, tmp_csv):
        path = tmp_csv(
            "s.csv", "date,p_neg,p_neu,p_pos\n2023-03-10,0.9373965,0.04212248,0.02048101\n"
        )
        recs = read_sentiment_file(path)
        assert len(recs) == 1
        assert recs[0].p_neg == pytest.approx(0.9374, abs=1e-4)

    def test_bad_sum_rejected(self, tmp_csv):
        path = tmp_csv("s.csv", "date,p_neg,p_neu,p_pos\n2023-03-10,0.5,0.5,0.5\n")
        with pytest.raises(InputError, match="do not sum to 1"):
            read_sentiment_file(path)

    def test_degenerate_one_hot_triple_is_valid(self, tmp_csv):
        recs = read_sentiment_file(tmp_csv("s.csv", "date,p_neg,p_neu,p_pos\n2023-03-10,1,0,0\n"))
        assert recs[0].p_neg == 1.0

    def test_probability_out_of_range(self, tmp_csv):
        path = tmp_csv("s.csv", "date,p_neg,p_neu,p_pos\n2023-03-10,1.2,-0.2,0.0\n")
        with pytest.raises(InputError, match=r"outside \[0, 1\]"):
            read_sentiment_file(path)

    def test_optional_text_column(self, tmp_csv):
        path = tmp_csv("s.csv", "date,p_neg,p_neu,p_pos,text\n2023-03-10,0,0,1,some headline\n")
        assert read_sentiment_file(path)[0].text == "some headline"

    def test_jsonl_autodetect(self, tmp_csv):
        path = tmp_csv(
            "s.jsonl",
            '{"date": "2023-03-10", "p_neg": 0.2, "p_neu": 0.3, "p_pos": 0.5}\n'
            '{"date": "2023-03-11", "p_neg": 0.0, "p_neu": 0.0, "p_pos": 1.0}\n',
        )
        recs = read_sentiment_file(path)
        assert [r.p_pos for r in recs] == [0.5, 1.0]

    def test_jsonl_missing_key(self, tmp_csv):
        path = tmp_csv("s.jsonl", '{"date": "2023-03-10", "p_neg": 0.2}\n')
        with pytest.raises(InputError, match="missing keys"):
            read_sentiment_file(path)


class TestAlignDates:
    CAL = [dt.date(2023, 5, 1), dt.date(2023, 5, 2), dt.date(2023, 5, 8)]

    def rec(self, d):
        return SentimentRecord(date=d, p_neg=0.0, p_neu=0.0, p_pos=1.0)

    def test_saturday_moves_to_monday_under_next(self):
        saturday = dt.date(2023, 5, 6)
        out = align_dates([self.rec(saturday)], self.CAL, AlignmentPolicy.NEXT_TRADING_DAY)
        assert out[0].date == dt.date(2023, 5, 8)

    def test_on_calendar_event_unchanged_under_all_policies(self):
        ev = self.rec(dt.date(2023, 5, 2))
        for policy in AlignmentPolicy:
            assert align_dates([ev], self.CAL, policy) == [ev]

    def test_saturday_dropped_under_drop(self):
        out = align_dates([self.rec(dt.date(2023, 5, 6))], self.CAL, AlignmentPolicy.DROP)
        assert out == []

    def test_previous_policy(self):
        out = align_dates(
            [self.rec(dt.date(2023, 5, 6))], self.CAL, AlignmentPolicy.PREVIOUS_TRADING_DAY
        )
        assert out[0].date == dt.date(2023, 5, 2)

    def test_event_after_calendar_end_errors_under_next(self):
        with pytest.raises(InputError, match="after the last calendar date"):
            align_dates([self.rec(dt.date(2023, 6, 1))], self.CAL, AlignmentPolicy.NEXT_TRADING_DAY)

    def test_event_before_calendar_start_errors_under_prev(self):
        with pytest.raises(InputError, match="before the first calendar date"):
            align_dates(
                [self.rec(dt.date(2023, 4, 1))], self.CAL, AlignmentPolicy.PREVIOUS_TRADING_DAY
            )

    @given(
        st.lists(st.dates(min_value=dt.date(2023, 4, 25), max_value=dt.date(2023, 5, 7)), max_size=12)
    )
    def test_idempotent(self, dates):
        events = [self.rec(d) for d in dates]
        once = align_dates(events, self.CAL, AlignmentPolicy.NEXT_TRADING_DAY)
        twice = align_dates(once, self.CAL, AlignmentPolicy.NEXT_TRADING_DAY)
        assert once == twice

    def test_non_monotone_calendar_rejected(self):
        with pytest.raises(InputError, match="strictly increasing"):
            align_dates([], [dt.date(2023, 5, 2), dt.date(2023, 5, 1)], AlignmentPolicy.DROP)


class TestGenericReaders:
    def test_series_csv(self, tmp_csv):
        path = tmp_csv("v.csv", "date,value\n2023-01-02,0.5\n2023-01-03,-1.5\n")
        assert read_series_csv(path) == [
            (dt.date(2023, 1, 2), 0.5),
            (dt.date(2023, 1, 3), -1.5),
        ]

    def test_dated_column_picks_named_column(self, tmp_csv):
        path = tmp_csv("f.csv", "date,a,b\n2023-01-02,1.0,2.0\n2023-01-03,,4.0\n")
        assert read_dated_column(path, "b") == [
            (dt.date(2023, 1, 2), 2.0),
            (dt.date(2023, 1, 3), 4.0),
        ]
        # blanks in the chosen column are skipped
        assert read_dated_column(path, "a") == [(dt.date(2023, 1, 2), 1.0)]

    def test_dated_column_requires_explicit_choice(self, tmp_csv):
        path = tmp_csv("f.csv", "date,a,b\n2023-01-02,1.0,2.0\n")
        with pytest.raises(InputError, match="pick one"):
            read_dated_column(path)

    def test_corpus_jsonl(self, tmp_csv):
        path = tmp_csv("c.jsonl", '{"label": "x", "text": "hello world"}\n')
        docs = read_corpus_jsonl(path)
        assert docs[0].label == "x"
        assert docs[0].text == "hello world"

    def test_corpus_jsonl_missing_key(self, tmp_csv):
        with pytest.raises(InputError, match="label/text"):
            read_corpus_jsonl(tmp_csv("c.jsonl", '{"text": "hello"}\n'))
