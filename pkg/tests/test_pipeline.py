"""Market pipeline: parsing, cleaning, returns, binarisation, streams."""

import datetime as dt
import io
import json
import math

import numpy as np
import pytest

from marketrng.pipeline import (
    FormatError,
    PriceRecord,
    ReturnSeries,
    adjust_price,
    binarise_median,
    build_stream,
    clean_panel,
    compute_return_series,
    log_returns,
    monthly_column_sums,
    parse_prices,
)
from marketrng.serial import BinarySequence, psi_profile

HEADER = "id,date,close,adjfactor,retfactor"


def month_end(year, month):
    if month == 12:
        return dt.date(year, 12, 31)
    return dt.date(year, month + 1, 1) - dt.timedelta(days=1)


def monthly_records(instrument, start_year, start_month, closes):
    records = []
    year, month = start_year, start_month
    for close in closes:
        records.append(
            PriceRecord(
                instrument_id=instrument,
                date=month_end(year, month),
                close_unadjusted=float(close),
                adj_factor=1.0,
                ret_factor=1.0,
            )
        )
        month += 1
        if month > 12:
            month = 1
            year += 1
    return records


class TestParsePrices:
    def test_single_valid_row(self):
        text = f"{HEADER}\nAAA,2001-01-31,10.5,1.0,1.0\n"
        result = parse_prices(io.StringIO(text))
        assert len(result.records) == 1 and not result.rejects
        rec = result.records[0]
        assert rec.instrument_id == "AAA"
        assert rec.date == dt.date(2001, 1, 31)
        assert rec.close_unadjusted == 10.5

    def test_empty_close_is_rejected_with_line(self):
        text = f"{HEADER}\nAAA,2001-01-31,,1.0,1.0\n"
        result = parse_prices(io.StringIO(text))
        assert not result.records
        assert len(result.rejects) == 1
        assert result.rejects[0].line == 2

    def test_crlf_and_lf_parse_identically(self):
        rows = [HEADER, "AAA,2001-01-31,10,1,1", "BBB,2001-01-31,20,1,1"]
        lf = parse_prices(io.StringIO("\n".join(rows) + "\n"))
        crlf = parse_prices(io.StringIO("\r\n".join(rows) + "\r\n"))
        assert lf.records == crlf.records
        assert lf.rejects == crlf.rejects

    def test_missing_header_is_format_error(self):
        with pytest.raises(FormatError):
            parse_prices(io.StringIO("AAA,2001-01-31,10,1,1\n"))

    def test_empty_file_is_format_error(self):
        with pytest.raises(FormatError):
            parse_prices(io.StringIO(""))

    def test_extra_columns_ignored(self):
        text = "id,date,close,adjfactor,retfactor,volume\nAAA,2001-01-31,10,1,1,12345\n"
        result = parse_prices(io.StringIO(text))
        assert len(result.records) == 1

    def test_bad_values_rejected(self):
        text = "\n".join(
            [
                HEADER,
                "AAA,2001-13-31,10,1,1",  # bad month
                "BBB,2001-01-31,-5,1,1",  # non-positive close
                "CCC,2001-01-31,10,0,1",  # zero factor
                ",2001-01-31,10,1,1",  # empty id
            ]
        )
        result = parse_prices(io.StringIO(text))
        assert not result.records
        assert [r.line for r in result.rejects] == [2, 3, 4, 5]


class TestCleanPanel:
    def test_contiguous_months_kept(self):
        records = monthly_records("AAA", 2001, 1, range(1, 25))
        kept, dropped = clean_panel(records, "monthly")
        assert "AAA" in kept and not dropped

    def test_gap_dropped(self):
        closes = list(range(1, 13))
        records = monthly_records("AAA", 2001, 1, closes)
        records = [r for r in records if r.date.month != 7]  # knock out July
        kept, dropped = clean_panel(records, "monthly")
        assert not kept
        assert dropped[0]["reason"] == "gap"

    def test_eleven_months_is_short(self):
        records = monthly_records("AAA", 2001, 1, range(1, 12))
        kept, dropped = clean_panel(records, "monthly")
        assert not kept
        assert dropped[0]["reason"] == "short"

    def test_twelve_months_is_enough(self):
        records = monthly_records("AAA", 2001, 1, range(1, 13))
        kept, _ = clean_panel(records, "monthly")
        assert "AAA" in kept

    def test_duplicate_period_dropped(self):
        records = monthly_records("AAA", 2001, 1, range(1, 13))
        records.append(records[0])
        kept, dropped = clean_panel(records, "monthly")
        assert not kept and dropped[0]["reason"] == "duplicate"

    def test_daily_gap_uses_inferred_calendar(self):
        # Calendar = union of observed dates; BBB missing one trading day.
        days = [dt.date(2001, 1, 2) + dt.timedelta(days=i) for i in range(400)]
        trading = [d for d in days if d.weekday() < 5][:300]
        recs = []
        for d in trading:
            recs.append(PriceRecord("AAA", d, 10.0, 1.0, 1.0))
        for d in trading:
            if d != trading[100]:
                recs.append(PriceRecord("BBB", d, 20.0, 1.0, 1.0))
        kept, dropped = clean_panel(recs, "daily")
        assert "AAA" in kept
        assert [d["id"] for d in dropped] == ["BBB"]
        assert dropped[0]["reason"] == "gap"

    def test_daily_short_dropped(self):
        days = [dt.date(2001, 1, 1) + dt.timedelta(days=i) for i in range(200)]
        recs = [PriceRecord("AAA", d, 10.0, 1.0, 1.0) for d in days]
        kept, dropped = clean_panel(recs, "daily")
        assert not kept and dropped[0]["reason"] == "short"

    def test_late_listing_not_penalised_in_life_scope(self):
        recs = monthly_records("AAA", 2001, 1, range(1, 25))
        recs += monthly_records("BBB", 2002, 1, range(1, 13))
        kept, dropped = clean_panel(recs, "monthly", gap_scope="life")
        assert set(kept) == {"AAA", "BBB"} and not dropped

    def test_dataset_scope_drops_partial_coverage(self):
        recs = monthly_records("AAA", 2001, 1, range(1, 25))
        recs += monthly_records("BBB", 2002, 1, range(1, 13))
        kept, dropped = clean_panel(recs, "monthly", gap_scope="dataset")
        assert set(kept) == {"AAA"}
        assert dropped[0]["id"] == "BBB" and dropped[0]["reason"] == "gap"

    def test_cleaning_is_idempotent(self):
        recs = monthly_records("AAA", 2001, 1, range(1, 25))
        recs += monthly_records("BBB", 2001, 1, [1, 2, 3])
        gapped = monthly_records("CCC", 2001, 1, range(1, 15))
        recs += [r for r in gapped if r.date.month != 5]
        kept, _ = clean_panel(recs, "monthly")
        flat = [r for records in kept.values() for r in records]
        kept_again, dropped_again = clean_panel(flat, "monthly")
        assert kept_again == kept and not dropped_again


class TestPriceMath:
    def test_adjust_examples(self):
        assert adjust_price(PriceRecord("A", dt.date(2001, 1, 31), 100, 1, 1)) == 100
        assert adjust_price(PriceRecord("A", dt.date(2001, 1, 31), 100, 2, 1)) == 200
        assert adjust_price(PriceRecord("A", dt.date(2001, 1, 31), 50, 1, 1.25)) == 40

    def test_adjust_rejects_non_positive(self):
        rec = PriceRecord("A", dt.date(2001, 1, 31), -1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            adjust_price(rec)

    def test_adjust_factor_scaling_invariance(self):
        # Power-of-two scales are exact in binary floating point; other
        # scales are verified at solver precision.
        rng = np.random.default_rng(21)
        for _ in range(1000):
            close = float(rng.uniform(0.5, 500.0))
            adj = float(rng.uniform(0.1, 10.0))
            ret = float(rng.uniform(0.1, 10.0))
            base = PriceRecord("A", dt.date(2001, 1, 31), close, adj, ret)
            c = 2.0 ** int(rng.integers(-20, 21))
            scaled = PriceRecord("A", dt.date(2001, 1, 31), close, adj * c, ret * c)
            assert adjust_price(scaled) == adjust_price(base)
            arbitrary = float(rng.uniform(0.01, 100.0))
            scaled2 = PriceRecord(
                "A", dt.date(2001, 1, 31), close, adj * arbitrary, ret * arbitrary
            )
            assert adjust_price(scaled2) == pytest.approx(adjust_price(base), rel=1e-12)

    def test_log_returns_examples(self):
        assert log_returns([1.0, math.e]).tolist() == pytest.approx([1.0])
        assert log_returns([7.5] * 6).tolist() == [0.0] * 5
        assert log_returns([100.0, 110.0])[0] == pytest.approx(math.log(1.1))

    def test_log_returns_errors(self):
        with pytest.raises(ValueError):
            log_returns([1.0])
        with pytest.raises(ValueError):
            log_returns([1.0, -2.0])

    def test_log_returns_scaling_invariance(self):
        rng = np.random.default_rng(22)
        for _ in range(1000):
            prices = rng.uniform(1.0, 200.0, size=int(rng.integers(2, 40)))
            c = 2.0 ** int(rng.integers(-20, 21))
            assert log_returns(prices * c).tolist() == log_returns(prices).tolist()


class TestBinarise:
    def test_hand_example(self):
        result = binarise_median([0.1, -0.2, 0.3, 0.05])
        assert result.bits.tolist() == [1, 0, 1, 0]
        assert result.median == pytest.approx(0.075)
        assert not result.degenerate

    def test_constant_input_degenerate(self):
        result = binarise_median([0.5, 0.5, 0.5])
        assert result.bits.tolist() == [0, 0, 0]
        assert result.degenerate

    def test_balance_property(self):
        rng = np.random.default_rng(23)
        for _ in range(1000):
            n = int(rng.integers(2, 200))
            returns = rng.standard_normal(n)
            bits = binarise_median(returns).bits
            ones = int(bits.sum())
            assert abs(ones - (n - ones)) <= 1

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(24)
        transforms = [np.exp, lambda x: 3.0 * x + 7.0, lambda x: x**3, np.arctan]
        for _ in range(1000):
            n = int(rng.integers(2, 60))
            returns = rng.uniform(-3.0, 3.0, size=n)
            reference = binarise_median(returns).bits
            transform = transforms[int(rng.integers(0, len(transforms)))]
            assert binarise_median(transform(returns)).bits.tolist() == reference.tolist()

    def test_too_short(self):
        with pytest.raises(ValueError):
            binarise_median([0.1])


def toy_series(n_firms=3, start=2001, years=2, seed=0):
    rng = np.random.default_rng(seed)
    series = {}
    for i in range(n_firms):
        name = f"F{i:02d}"
        closes = np.exp(np.cumsum(rng.standard_normal(years * 12 + 1) * 0.05)) * 100
        records = monthly_records(name, start, 1, closes)
        series[name] = compute_return_series(records, "monthly")
    return series


class TestBuildStream:
    def test_firm_and_year_counts(self):
        series = toy_series(n_firms=1, years=2)
        firm = build_stream(series, "firm_separated")
        year = build_stream(series, "year_separated")
        assert len(firm.sequences) == 1
        assert len(year.sequences) == 2  # one per calendar year

    def test_firm_stream_monobit_is_tiny(self):
        series = toy_series(n_firms=4, years=3, seed=5)
        stream = build_stream(series, "firm_separated")
        for s in stream.sequences:
            profile = psi_profile(s, max_nu=3)
            assert profile.psi[1] <= 1.0 / len(s) + 1e-12

    def test_year_sequences_near_balanced(self):
        series = toy_series(n_firms=5, years=3, seed=6)
        stream = build_stream(series, "year_separated")
        for s, meta in zip(stream.sequences, stream.provenance):
            ones = int(s.bits.sum())
            zeros = len(s) - ones
            odd_segments = sum(1 for seg in meta["segments"] if seg["n_bits"] % 2 == 1)
            assert abs(ones - zeros) <= odd_segments

    def test_year_segment_bounds_firm_major(self):
        series = toy_series(n_firms=3, years=2, seed=7)
        stream = build_stream(series, "year_separated")
        first_year = stream.sequences[0]
        meta = stream.provenance[0]
        sizes = [seg["n_bits"] for seg in meta["segments"]]
        assert list(first_year.segment_bounds) == list(np.cumsum(sizes)[:-1])
        assert [seg["source_id"] for seg in meta["segments"]] == sorted(
            seg["source_id"] for seg in meta["segments"]
        )

    def test_single_return_segments_skipped_and_audited(self):
        # Firm listed in November: December is its only return that year.
        records = monthly_records("AAA", 2001, 11, [100, 101, 102, 103, 104, 105])
        series = {"AAA": compute_return_series(records, "monthly")}
        stream = build_stream(series, "year_separated")
        assert [s.source_id for s in stream.sequences] == ["2002"]
        assert stream.audit and stream.audit[0]["reason"] == "short_segment"

    def test_provenance_deterministic(self):
        a = build_stream(toy_series(seed=8), "year_separated")
        b = build_stream(toy_series(seed=8), "year_separated")
        assert json.dumps(a.provenance, sort_keys=True) == json.dumps(
            b.provenance, sort_keys=True
        )

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            build_stream({}, "banana")


class TestMonthlyColumnSums:
    def test_two_firm_example(self):
        bits = np.concatenate([np.tile([1, 0], 6), np.tile([0, 1], 6)])
        s = BinarySequence(bits=bits, source_id="2001", segment_bounds=(12,))
        result = monthly_column_sums(s, 12)
        assert result.values.tolist() == [1] * 12
        assert result.rows_included == 2

    def test_conservation(self):
        rng = np.random.default_rng(30)
        segments = [rng.integers(0, 2, size=12) for _ in range(7)]
        bits = np.concatenate(segments)
        bounds = tuple(np.cumsum([12] * 6))
        s = BinarySequence(bits=bits, source_id="y", segment_bounds=bounds)
        result = monthly_column_sums(s, 12)
        assert result.values.sum() == bits.sum()

    def test_incomplete_segments_excluded(self):
        bits = np.concatenate([np.ones(12, dtype=np.uint8), np.zeros(5, dtype=np.uint8)])
        s = BinarySequence(bits=bits, source_id="y", segment_bounds=(12,))
        result = monthly_column_sums(s, 12)
        assert result.rows_included == 1 and result.rows_excluded == 1
        assert result.values.tolist() == [1] * 12

    def test_no_complete_segment_is_error(self):
        s = BinarySequence(bits=np.ones(5, dtype=np.uint8), source_id="y")
        with pytest.raises(ValueError):
            monthly_column_sums(s, 12)

    def test_binomial_concentration(self):
        rng = np.random.default_rng(31)
        firms = 400
        bits = rng.integers(0, 2, size=firms * 12).astype(np.uint8)
        bounds = tuple(np.cumsum([12] * (firms - 1)))
        s = BinarySequence(bits=bits, source_id="y", segment_bounds=bounds)
        sums = monthly_column_sums(s, 12).values
        # Binomial(400, 1/2): 5 sigma band around 200.
        assert np.all(np.abs(sums - firms / 2) < 5 * np.sqrt(firms) / 2)


class TestReturnSeries:
    def test_validation(self):
        with pytest.raises(ValueError):
            ReturnSeries(
                instrument_id="A",
                frequency="monthly",
                dates=(dt.date(2001, 2, 28), dt.date(2001, 2, 28)),
                returns=np.array([0.1, 0.2]),
            )
        with pytest.raises(ValueError):
            ReturnSeries(
                instrument_id="A",
                frequency="monthly",
                dates=(dt.date(2001, 2, 28),),
                returns=np.array([0.1, 0.2]),
            )

    def test_compute_return_series(self):
        records = monthly_records("AAA", 2001, 1, [100.0, 110.0, 121.0])
        series = compute_return_series(records, "monthly")
        assert series.returns.tolist() == pytest.approx([math.log(1.1)] * 2)
        assert series.dates[0] == month_end(2001, 2)
