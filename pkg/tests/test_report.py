"""Cohort loading, analysis, and rendering tests."""

from __future__ import annotations

import io
import json

import pytest

from turnwise import sim
from turnwise.cohort import (
    COHORT_CSV_HEADER,
    StatsReport,
    analyze,
    bundled_cohort_path,
    load_cohort,
)
from turnwise.errors import DegenerateDataError, ValidationError
from turnwise.render import format_p, format_statistic, render, render_json, render_svg, render_table


@pytest.fixture(scope="module")
def fixture_table():
    return load_cohort(bundled_cohort_path())


# ---------------------------------------------------------------------------
# load_cohort


def test_fixture_loads_83_rows(fixture_table):
    assert len(fixture_table) == 83


def test_unknown_column_named():
    text = ",".join(COHORT_CSV_HEADER + ["extra_col"]) + "\n"
    with pytest.raises(ValidationError) as exc:
        load_cohort(io.StringIO(text))
    assert exc.value.code == "unknown_column"
    assert "extra_col" in exc.value.message


def test_missing_column_named():
    cols = [c for c in COHORT_CSV_HEADER if c != "certificate"]
    with pytest.raises(ValidationError) as exc:
        load_cohort(io.StringIO(",".join(cols) + "\n"))
    assert exc.value.code == "missing_column"
    assert "certificate" in exc.value.message


def test_empty_file_rejected():
    with pytest.raises(ValidationError) as exc:
        load_cohort(io.StringIO(""))
    assert exc.value.code == "empty_cohort"
    with pytest.raises(ValidationError) as exc:
        load_cohort(io.StringIO(",".join(COHORT_CSV_HEADER) + "\n"))
    assert exc.value.code == "empty_cohort"


def _row(**overrides) -> str:
    base = {
        "student_id": "s1", "calls_total": "5", "calls_first4wk": "3",
        "final_grade": "80", "coding_grade": "70", "capstone_grade": "75",
        "collab_grade": "85", "pitch_completed": "1", "certificate": "1",
        "passed": "1", "dropped": "0",
    }
    base.update(overrides)
    return ",".join(base[c] for c in COHORT_CSV_HEADER)


def test_duplicate_id_rejected():
    text = ",".join(COHORT_CSV_HEADER) + "\n" + _row() + "\n" + _row() + "\n"
    with pytest.raises(ValidationError) as exc:
        load_cohort(io.StringIO(text))
    assert exc.value.code == "duplicate_id"
    assert "line 3" in exc.value.message


def test_nonbinary_flag_rejected_with_line():
    text = ",".join(COHORT_CSV_HEADER) + "\n" + _row(certificate="2") + "\n"
    with pytest.raises(ValidationError) as exc:
        load_cohort(io.StringIO(text))
    assert exc.value.code == "nonbinary_flag"
    assert "line 2" in exc.value.message


def test_missing_grade_requires_dropped():
    text = ",".join(COHORT_CSV_HEADER) + "\n" + _row(final_grade="") + "\n"
    with pytest.raises(ValidationError) as exc:
        load_cohort(io.StringIO(text))
    assert exc.value.code == "missing_grade"
    ok = ",".join(COHORT_CSV_HEADER) + "\n" + _row(
        final_grade="", coding_grade="", capstone_grade="", collab_grade="",
        certificate="0", passed="1", dropped="1",
    ) + "\n"
    table = load_cohort(io.StringIO(ok))
    assert table.rows[0].final_grade is None


# ---------------------------------------------------------------------------
# analyze


def test_report_shape_both_cohort_modes(fixture_table):
    for cohort in ("completers", "all"):
        report = analyze(fixture_table, predictor="total", cohort=cohort)
        assert len(report.correlation_rows) == 6
        assert len(report.odds_rows) == 2
        assert report.metadata["holm_family"] == 6
        for row in report.correlation_rows:
            assert -1.0 <= row.statistic <= 1.0
            assert row.p_adjusted >= row.p_raw


def test_filter_arithmetic(fixture_table):
    completers = analyze(fixture_table, cohort="completers")
    full = analyze(fixture_table, cohort="all")
    dropped = sum(r.dropped for r in fixture_table.rows)
    assert completers.metadata["n_rows"] + dropped == full.metadata["n_rows"]
    # completers analysis never reads a dropped row
    assert completers.metadata["n_rows"] == len(fixture_table.completers())
    assert all(p[2] == 0 for p in completers.scatter.points)


def test_fixture_certificate_or_within_small_sample_window(fixture_table):
    report = analyze(fixture_table, predictor="total", cohort="all")
    cert = next(r for r in report.odds_rows if r.attribute == "Certificate Earned")
    assert 1.4 <= cert.statistic <= 2.8
    assert cert.n == 83


def test_degenerate_predictor_named():
    rows = [
        _row(student_id=f"s{i}", calls_total="5", calls_first4wk="3",
             final_grade=str(60 + i), certificate=str(i % 2), passed=str(i % 2))
        for i in range(20)
    ]
    text = ",".join(COHORT_CSV_HEADER) + "\n" + "\n".join(rows) + "\n"
    table = load_cohort(io.StringIO(text))
    with pytest.raises(DegenerateDataError) as exc:
        analyze(table, predictor="total", cohort="all")
    assert exc.value.code == "degenerate_variance"


def test_bad_arguments():
    with pytest.raises(ValidationError):
        analyze(load_cohort(bundled_cohort_path()), predictor="weekly")
    with pytest.raises(ValidationError):
        analyze(load_cohort(bundled_cohort_path()), cohort="everyone")


# ---------------------------------------------------------------------------
# render


def test_formatting_contracts():
    assert format_statistic(0.5) == "0.500"
    assert format_statistic(1.79) == "1.79"
    assert format_statistic(2.0) == "2.00"
    assert format_statistic(-0.27) == "-0.270"
    assert format_p(1.56e-4) == "1.56e-04"
    assert format_p(5.40e-7) == "5.40e-07"


def test_table_render_deterministic(fixture_table):
    report = analyze(fixture_table, predictor="total", cohort="all")
    a = render_table(report)
    b = render(analyze(fixture_table, predictor="total", cohort="all"), "table")
    assert a == b
    assert "Significance" in a
    assert "*p < 0.05" in a


def test_json_round_trip(fixture_table):
    report = analyze(fixture_table, predictor="first4wk", cohort="all")
    text = render_json(report)
    again = StatsReport.from_dict(json.loads(text))
    assert again == report
    assert render_json(again) == text


def test_svg_point_and_curve_counts(fixture_table):
    report = analyze(fixture_table, predictor="total", cohort="all")
    svg = render_svg(report)
    n = report.metadata["n_rows"]
    assert svg.count("<circle") == n
    assert svg.count("<path") == 1
    # dropped students are marked in the distinct fill
    dropped = sum(1 for p in report.scatter.points if p[2])
    assert svg.count("#c0392b") == dropped
    assert svg.startswith("<svg")


def test_stars_published_odds_cell(fixture_table):
    # certificate odds cell of the early-usage table prints p = 1.96e-05
    from turnwise.stats import significance_stars

    assert significance_stars(1.96e-05) == "****"


def test_render_rejects_unknown_format(fixture_table):
    report = analyze(fixture_table)
    with pytest.raises(ValidationError):
        render(report, "pdf")
