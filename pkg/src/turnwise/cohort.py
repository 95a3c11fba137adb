"""Cohort CSV loading and the correlation / odds-ratio analysis.

The cohort file is one row per student:

    student_id,calls_total,calls_first4wk,final_grade,coding_grade,
    capstone_grade,collab_grade,pitch_completed,certificate,passed,dropped

Grade cells may be empty only for dropped students. Binary columns hold 0
or 1. The analysis correlates a chosen call-count predictor against six
outcomes with a Holm-corrected family, then fits logistic models for the
two pass/fail outcomes. Students with missing grades are excluded listwise
from the grade correlations but are included (their binary outcomes count
as recorded, i.e. 0) in the completion models when analyzing the whole
cohort.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence

from .errors import DegenerateDataError, ValidationError
from .stats import StatsRow, fit_logistic, holm_adjust, pearson, pearson_p, significance_stars

COHORT_CSV_HEADER = [
    "student_id", "calls_total", "calls_first4wk",
    "final_grade", "coding_grade", "capstone_grade", "collab_grade",
    "pitch_completed", "certificate", "passed", "dropped",
]

PREDICTORS = {"total": "calls_total", "first4wk": "calls_first4wk"}
COHORT_FILTERS = ("completers", "all")

# (display name, row attribute) in fixed report order
CORRELATION_OUTCOMES = [
    ("Final Grades", "final_grade"),
    ("Coding Exercise Grades", "coding_grade"),
    ("Capstone Exercise Grades", "capstone_grade"),
    ("Collaboration Exercise Grades", "collab_grade"),
    ("Pitch Video Completion", "pitch_completed"),
    ("Certificate Earned", "certificate"),
]
HOLM_FAMILY_SIZE = len(CORRELATION_OUTCOMES)

STAR_LEGEND = "*p < 0.05, **p < 0.01, ***p < 0.001, ****p < 0.0001"


def bundled_cohort_path() -> Path:
    """Path of the packaged synthetic cohort (83 students, generator seed 11)."""
    return Path(__file__).parent / "data" / "cohort_n83_seed11.csv"


@dataclass(frozen=True, slots=True)
class CohortRow:
    student_id: str
    calls_total: int
    calls_first4wk: int
    final_grade: float | None
    coding_grade: float | None
    capstone_grade: float | None
    collab_grade: float | None
    pitch_completed: int
    certificate: int
    passed: int
    dropped: int


@dataclass(frozen=True)
class CohortTable:
    rows: tuple[CohortRow, ...]

    def __len__(self) -> int:
        return len(self.rows)

    def completers(self) -> list[CohortRow]:
        return [r for r in self.rows if not r.dropped]


def _parse_int(value: str, column: str, line: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise ValidationError("bad_value", f"line {line}: {column} must be an integer, got {value!r}") from None


def _parse_flag(value: str, column: str, line: int) -> int:
    if value not in ("0", "1"):
        raise ValidationError("nonbinary_flag", f"line {line}: {column} must be 0 or 1, got {value!r}")
    return int(value)


def _parse_grade(value: str, column: str, line: int, dropped: bool) -> float | None:
    if value == "":
        if not dropped:
            raise ValidationError("missing_grade", f"line {line}: {column} missing for a non-dropped student")
        return None
    try:
        grade = float(value)
    except ValueError:
        raise ValidationError("bad_value", f"line {line}: {column} must be numeric, got {value!r}") from None
    if not (0.0 <= grade <= 100.0):
        raise ValidationError("grade_out_of_range", f"line {line}: {column}={grade} outside [0, 100]")
    return grade


def load_cohort(source: str | Path | IO[str]) -> CohortTable:
    """Read and validate a cohort CSV; violations name their line number."""
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            return load_cohort(fh)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError("empty_cohort", "cohort file has no header") from None
    missing = [c for c in COHORT_CSV_HEADER if c not in header]
    unknown = [c for c in header if c not in COHORT_CSV_HEADER]
    if missing:
        raise ValidationError("missing_column", f"missing column(s): {', '.join(missing)}")
    if unknown:
        raise ValidationError("unknown_column", f"unknown column(s): {', '.join(unknown)}")
    if header != COHORT_CSV_HEADER:
        raise ValidationError("bad_column_order", "columns must appear in the documented order")

    rows: list[CohortRow] = []
    seen: set[str] = set()
    for line_no, cells in enumerate(reader, start=2):
        if not cells or all(c == "" for c in cells):
            continue
        if len(cells) != len(COHORT_CSV_HEADER):
            raise ValidationError("bad_row", f"line {line_no}: expected {len(COHORT_CSV_HEADER)} cells, got {len(cells)}")
        rec = dict(zip(COHORT_CSV_HEADER, cells))
        student_id = rec["student_id"]
        if not student_id:
            raise ValidationError("bad_value", f"line {line_no}: empty student_id")
        if student_id in seen:
            raise ValidationError("duplicate_id", f"line {line_no}: duplicate student_id {student_id!r}")
        seen.add(student_id)
        dropped = _parse_flag(rec["dropped"], "dropped", line_no)
        calls_total = _parse_int(rec["calls_total"], "calls_total", line_no)
        calls_first4wk = _parse_int(rec["calls_first4wk"], "calls_first4wk", line_no)
        if calls_total < 0 or calls_first4wk < 0:
            raise ValidationError("bad_value", f"line {line_no}: call counts must be >= 0")
        rows.append(
            CohortRow(
                student_id=student_id,
                calls_total=calls_total,
                calls_first4wk=calls_first4wk,
                final_grade=_parse_grade(rec["final_grade"], "final_grade", line_no, bool(dropped)),
                coding_grade=_parse_grade(rec["coding_grade"], "coding_grade", line_no, bool(dropped)),
                capstone_grade=_parse_grade(rec["capstone_grade"], "capstone_grade", line_no, bool(dropped)),
                collab_grade=_parse_grade(rec["collab_grade"], "collab_grade", line_no, bool(dropped)),
                pitch_completed=_parse_flag(rec["pitch_completed"], "pitch_completed", line_no),
                certificate=_parse_flag(rec["certificate"], "certificate", line_no),
                passed=_parse_flag(rec["passed"], "passed", line_no),
                dropped=dropped,
            )
        )
    if not rows:
        raise ValidationError("empty_cohort", "cohort file has no data rows")
    return CohortTable(rows=tuple(rows))


# ---------------------------------------------------------------------------
# Analysis


@dataclass(frozen=True)
class ScatterSeries:
    """Raw points behind the odds-ratio figure (x, binary outcome, dropped)."""

    outcome: str
    points: tuple[tuple[float, int, int], ...]
    beta0: float
    beta1: float


@dataclass(frozen=True)
class StatsReport:
    correlation_rows: tuple[StatsRow, ...]
    odds_rows: tuple[StatsRow, ...]
    scatter: ScatterSeries
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def row_dict(r: StatsRow) -> dict:
            return {
                "attribute": r.attribute, "statistic": r.statistic, "n": r.n,
                "p_raw": r.p_raw, "p_adjusted": r.p_adjusted, "stars": r.stars,
            }

        return {
            "metadata": dict(self.metadata),
            "correlations": [row_dict(r) for r in self.correlation_rows],
            "odds_ratios": [row_dict(r) for r in self.odds_rows],
            "scatter": {
                "outcome": self.scatter.outcome,
                "points": [list(p) for p in self.scatter.points],
                "beta0": self.scatter.beta0,
                "beta1": self.scatter.beta1,
            },
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "StatsReport":
        def mk_row(d: dict) -> StatsRow:
            return StatsRow(
                attribute=d["attribute"], statistic=d["statistic"], n=d["n"],
                p_raw=d["p_raw"], p_adjusted=d["p_adjusted"], stars=d["stars"],
            )

        sc = obj["scatter"]
        return cls(
            correlation_rows=tuple(mk_row(d) for d in obj["correlations"]),
            odds_rows=tuple(mk_row(d) for d in obj["odds_ratios"]),
            scatter=ScatterSeries(
                outcome=sc["outcome"],
                points=tuple((p[0], p[1], p[2]) for p in sc["points"]),
                beta0=sc["beta0"],
                beta1=sc["beta1"],
            ),
            metadata=dict(obj["metadata"]),
        )


def _present_pairs(
    rows: Iterable[CohortRow], predictor_attr: str, outcome_attr: str
) -> tuple[list[float], list[float]]:
    xs: list[float] = []
    ys: list[float] = []
    for row in rows:
        y = getattr(row, outcome_attr)
        if y is None:
            continue
        xs.append(float(getattr(row, predictor_attr)))
        ys.append(float(y))
    return xs, ys


def _grades_binary(row: CohortRow, pass_mark: float) -> int:
    if row.final_grade is not None:
        return int(row.final_grade >= pass_mark)
    return row.passed


def analyze(
    table: CohortTable,
    predictor: str = "total",
    cohort: str = "completers",
    alpha: float = 0.05,
    pass_mark: float = 70.0,
) -> StatsReport:
    """Correlations (Holm family of six) plus two logistic odds models."""
    if predictor not in PREDICTORS:
        raise ValidationError("bad_predictor", f"predictor must be one of {sorted(PREDICTORS)}")
    if cohort not in COHORT_FILTERS:
        raise ValidationError("bad_cohort", f"cohort must be one of {COHORT_FILTERS}")
    predictor_attr = PREDICTORS[predictor]
    rows: Sequence[CohortRow] = table.completers() if cohort == "completers" else table.rows
    if len(rows) < 10:
        raise ValidationError("too_few_rows", f"need >= 10 rows after the cohort filter, got {len(rows)}")

    raw_ps: list[float] = []
    partial: list[tuple[str, float, int, float]] = []
    for name, attr in CORRELATION_OUTCOMES:
        xs, ys = _present_pairs(rows, predictor_attr, attr)
        try:
            r = pearson(xs, ys)
            p = pearson_p(r, len(xs)).p
        except DegenerateDataError as exc:
            raise DegenerateDataError(exc.code, f"{name}: {exc.message}") from None
        partial.append((name, r, len(xs), p))
        raw_ps.append(p)
    adjusted = holm_adjust(raw_ps)
    correlation_rows = tuple(
        StatsRow(
            attribute=name, statistic=r, n=n,
            p_raw=p, p_adjusted=p_adj, stars=significance_stars(p_adj),
        )
        for (name, r, n, p), p_adj in zip(partial, adjusted)
    )

    odds_rows = []
    scatter: ScatterSeries | None = None
    for name, values in (
        ("Grades", [_grades_binary(row, pass_mark) for row in rows]),
        ("Certificate Earned", [row.certificate for row in rows]),
    ):
        xs = [float(getattr(row, predictor_attr)) for row in rows]
        try:
            fit = fit_logistic(xs, values)
        except DegenerateDataError as exc:
            raise DegenerateDataError(exc.code, f"{name}: {exc.message}") from None
        odds_rows.append(
            StatsRow(
                attribute=name, statistic=fit.odds_ratio, n=len(xs),
                p_raw=fit.p_wald, p_adjusted=fit.p_wald, stars=significance_stars(fit.p_wald),
            )
        )
        if name == "Certificate Earned":
            scatter = ScatterSeries(
                outcome=name,
                points=tuple(
                    (x, v, row.dropped) for x, v, row in zip(xs, values, rows)
                ),
                beta0=fit.beta0,
                beta1=fit.beta1,
            )

    assert scatter is not None
    return StatsReport(
        correlation_rows=correlation_rows,
        odds_rows=tuple(odds_rows),
        scatter=scatter,
        metadata={
            "predictor": predictor,
            "cohort": cohort,
            "alpha": alpha,
            "pass_mark": pass_mark,
            "holm_family": HOLM_FAMILY_SIZE,
            "n_rows": len(rows),
        },
    )
