"""Report rendering: fixed-width text tables, JSON, and an SVG figure.

Formatting contract (stable bytes for identical inputs): statistics are
printed with three significant digits, p-values in scientific notation
with three significant digits, rows in the fixed outcome order chosen by
the analysis.
"""

from __future__ import annotations

import json
import math

from .cohort import STAR_LEGEND, ScatterSeries, StatsReport
from .errors import ValidationError


def format_statistic(x: float) -> str:
    """Three significant digits, trailing zeros kept (0.5 -> '0.500')."""
    if x == 0:
        return "0.00"
    exponent = math.floor(math.log10(abs(x)))
    if -4 < exponent < 4:
        decimals = max(0, 2 - exponent)
        return f"{x:.{decimals}f}"
    return f"{x:.2e}"


def format_p(p: float) -> str:
    return f"{p:.2e}"


def _table(rows: list[list[str]], header: list[str]) -> str:
    widths = [max(len(header[i]), *(len(r[i]) for r in rows)) if rows else len(header[i]) for i in range(len(header))]
    def fmt(cells: list[str]) -> str:
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    lines = [fmt(header), fmt(["-" * w for w in widths])]
    lines.extend(fmt(r) for r in rows)
    return "\n".join(lines)


def render_table(report: StatsReport) -> str:
    meta = report.metadata
    out = []
    out.append(
        f"Cohort analysis (predictor: {meta['predictor']}, cohort: {meta['cohort']}, "
        f"n = {meta['n_rows']}, alpha = {meta['alpha']}, pass mark = {meta['pass_mark']})"
    )
    out.append(STAR_LEGEND)
    out.append("")
    out.append(f"Correlations (Holm-corrected family of {meta['holm_family']})")
    out.append(
        _table(
            [
                [r.attribute, format_statistic(r.statistic), str(r.n), format_p(r.p_adjusted), r.stars]
                for r in report.correlation_rows
            ],
            ["Attribute", "r", "n", "p", "Significance"],
        )
    )
    out.append("")
    out.append("Odds ratios per additional call (logistic fit, Wald test)")
    out.append(
        _table(
            [
                [r.attribute, format_statistic(r.statistic), str(r.n), format_p(r.p_adjusted), r.stars]
                for r in report.odds_rows
            ],
            ["Attribute", "Odds Ratio", "n", "p", "Significance"],
        )
    )
    out.append("")
    return "\n".join(out)


def render_json(report: StatsReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# SVG scatter + logistic curve


_W, _H = 640, 440
_MARGIN = 50
_POINT_FILL = "#4a6fa5"
_DROPPED_FILL = "#c0392b"


def _sigmoid(z: float) -> float:
    return 1.0 / (1.0 + math.exp(-z))


def render_svg(report: StatsReport) -> str:
    """Scatter of predictor vs the binary outcome with the fitted curve.

    Exactly one <circle> per analyzed student (dropped students in red) and
    one <path> for the fitted probability curve.
    """
    sc: ScatterSeries = report.scatter
    if not sc.points:
        raise ValidationError("empty_scatter", "no points to draw")
    xs = [p[0] for p in sc.points]
    x_min, x_max = min(xs), max(xs)
    if x_max == x_min:
        x_max = x_min + 1.0
    plot_w = _W - 2 * _MARGIN
    plot_h = _H - 2 * _MARGIN

    def px(x: float) -> float:
        return _MARGIN + (x - x_min) / (x_max - x_min) * plot_w

    def py(y: float) -> float:
        return _H - _MARGIN - y * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_W} {_H}" font-family="sans-serif">',
        f'<line x1="{_MARGIN}" y1="{_H - _MARGIN}" x2="{_W - _MARGIN}" y2="{_H - _MARGIN}" stroke="#333"/>',
        f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" y2="{_H - _MARGIN}" stroke="#333"/>',
        f'<text x="{_W / 2:.1f}" y="{_H - 12}" text-anchor="middle" font-size="13">'
        f"calls ({report.metadata['predictor']})</text>",
        f'<text x="14" y="{_H / 2:.1f}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 14 {_H / 2:.1f})">{sc.outcome}</text>',
    ]
    curve = []
    steps = 100
    for i in range(steps + 1):
        x = x_min + (x_max - x_min) * i / steps
        y = _sigmoid(sc.beta0 + sc.beta1 * x)
        curve.append(f"{'M' if i == 0 else 'L'}{px(x):.2f},{py(y):.2f}")
    parts.append(f'<path id="fit-curve" d="{" ".join(curve)}" fill="none" stroke="#6a3d9a" stroke-width="2"/>')
    for x, y, dropped in sc.points:
        fill = _DROPPED_FILL if dropped else _POINT_FILL
        parts.append(
            f'<circle class="pt" cx="{px(x):.2f}" cy="{py(float(y)):.2f}" r="4" '
            f'fill="{fill}" fill-opacity="0.75"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render(report: StatsReport, fmt: str) -> str:
    if fmt == "table":
        return render_table(report)
    if fmt == "json":
        return render_json(report)
    if fmt == "svg":
        return render_svg(report)
    raise ValidationError("bad_format", f"format must be table, json, or svg; got {fmt!r}")
