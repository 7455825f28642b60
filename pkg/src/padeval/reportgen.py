"""Rendering: rank tables, DET-curve CSVs on probit axes, report JSON.

Percent formatting (x100, half-up to 2 decimals) happens only here; exported
JSON carries full-precision fractions. DET CSVs add probit columns (the
standard-normal quantile of each rate) with rates clamped away from 0 and 1
by half a count, since the probit diverges there.
"""
from __future__ import annotations

import json
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from scipy.stats import norm

from .leaderboard import RankedTable
from .manifest import PaisKind
from .metrics import BPCER_AP_POINTS, DetCurve, MetricsReport, av_rank

RANK_COLUMNS = ("Rank", "Team", "EER", "BPCER10", "BPCER20", "BPCER100", "AVRank")


class ReportError(ValueError):
    """Rendering contract violation (empty table, unknown scope, bad report)."""


def format_percent(fraction: float) -> str:
    """Render a fraction as percent, half-up to 2 decimals; exactly 100 drops
    the trailing zeros (the convention used by the published tables)."""
    pct = Decimal(repr(float(fraction))) * 100
    q = pct.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    if q == 100:
        return "100"
    return f"{q:.2f}"


def _rank_cells(table: RankedTable) -> list[tuple[str, ...]]:
    if not table.rows:
        raise ReportError("empty rank table")
    cells = [tuple(RANK_COLUMNS)]
    for row in table.rows:
        if not row.participant:
            raise ReportError("empty participant name")
        cells.append(
            (
                str(row.rank),
                row.participant,
                format_percent(row.eer),
                format_percent(row.bpcer10),
                format_percent(row.bpcer20),
                format_percent(row.bpcer100),
                format_percent(row.av_rank),
            )
        )
    return cells


def render_rank_table(table: RankedTable) -> str:
    """Plain-text table, columns padded for alignment."""
    cells = _rank_cells(table)
    widths = [max(len(r[i]) for r in cells) for i in range(len(RANK_COLUMNS))]
    lines = [
        "  ".join(value.ljust(width) for value, width in zip(row, widths)).rstrip()
        for row in cells
    ]
    return "\n".join(lines) + "\n"


def rank_table_csv(table: RankedTable) -> str:
    return "\n".join(",".join(row) for row in _rank_cells(table)) + "\n"


def export_rank_table(table: RankedTable, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"rank_{table.track.value}.csv"
    path.write_text(rank_table_csv(table), encoding="utf-8")
    return path


def _probit(rate: float, n: int) -> float:
    floor = 1.0 / (2 * n)
    return float(norm.ppf(min(max(rate, floor), 1.0 - floor)))


def det_csv(curve: DetCurve, n_attack: int, n_bonafide: int) -> str:
    """DET curve rows with probit columns; rates clamped to
    [1/(2N), 1 - 1/(2N)] per side before the quantile."""
    lines = ["threshold,apcer,bpcer,apcer_probit,bpcer_probit"]
    for t, a, b in curve.points():
        lines.append(
            f"{t!r},{a!r},{b!r},{_probit(a, n_attack)!r},{_probit(b, n_bonafide)!r}"
        )
    return "\n".join(lines) + "\n"


def export_det(report: MetricsReport, scope: str, out_dir: str | Path) -> list[Path]:
    """Write DET CSVs for one scope: ``global``, ``pais`` or ``country``.

    Returns the written paths (one file per curve). Raises ReportError when
    the scope is absent from the report, listing what is available.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    available = []
    if report.det is not None:
        available.append("global")
    if report.per_pais:
        available.append("pais")
    if report.per_country:
        available.append("country")

    def _counts(n_attack, n_bonafide, label):
        if not n_attack or not n_bonafide:
            raise ReportError(f"{label}: sample counts missing; cannot clamp probit")
        return n_attack, n_bonafide

    paths = []
    if scope == "global" and report.det is not None:
        n_attack = sum((report.n_attacks_by_pais or {}).values())
        n_attack, n_bf = _counts(n_attack, report.n_bonafide, "global")
        path = out / "det_global.csv"
        path.write_text(det_csv(report.det, n_attack, n_bf), encoding="utf-8")
        paths.append(path)
    elif scope == "pais" and report.per_pais:
        for kind in PaisKind:
            sub = report.per_pais.get(kind)
            if sub is None or sub.det is None:
                continue
            n_attack, n_bf = _counts(sub.n_attack, sub.n_bonafide, kind.value)
            path = out / f"det_pais_{kind.value}.csv"
            path.write_text(det_csv(sub.det, n_attack, n_bf), encoding="utf-8")
            paths.append(path)
    elif scope == "country" and report.per_country:
        for country in sorted(report.per_country):
            sub = report.per_country[country]
            if sub.det is None:
                continue
            n_attack, n_bf = _counts(sub.n_attack, sub.n_bonafide, country)
            path = out / f"det_country_{country}.csv"
            path.write_text(det_csv(sub.det, n_attack, n_bf), encoding="utf-8")
            paths.append(path)
    else:
        raise ReportError(
            f"scope {scope!r} not in report; available: {', '.join(available) or 'none'}"
        )
    return paths


def export_report(report: MetricsReport) -> str:
    """Lossless JSON for a MetricsReport: stable key order, full precision.

    Re-checks the ranking invariant (av_rank equals the weighted BPCER_AP
    sum) on every export.
    """
    expected = av_rank(*(report.bpcer_ap[ap].bpcer for ap in BPCER_AP_POINTS))
    if report.av_rank != expected:
        raise ReportError("report av_rank does not match its operating points")
    return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"


def parse_report(text: str) -> MetricsReport:
    try:
        return MetricsReport.from_dict(json.loads(text))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ReportError(f"bad report JSON: {exc}") from None


def write_report(report: MetricsReport, out_dir: str | Path, run_id: str) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"report_{run_id}.json"
    path.write_text(export_report(report), encoding="utf-8")
    return path
