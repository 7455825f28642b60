"""Percent rendering, DET CSV export with probit axes, report JSON round-trips."""
from __future__ import annotations

import json
import random

import pytest
from scipy.stats import norm

from padeval.leaderboard import RankedTable, RankRow, Track
from padeval.manifest import Manifest, PaisKind, SampleClass, SampleRecord
from padeval.metrics import MetricsReport, evaluate_all
from padeval.reportgen import (
    ReportError,
    det_csv,
    export_det,
    export_rank_table,
    export_report,
    format_percent,
    parse_report,
    rank_table_csv,
    render_rank_table,
    write_report,
)


def _manifest(n_bf=8, n_atk=12, countries=("CHL", "GTM")):
    kinds = list(PaisKind)
    records = [
        SampleRecord(f"b{i}", f"b{i}.png", SampleClass.bonafide(),
                     countries[i % len(countries)], f"u{i}")
        for i in range(n_bf)
    ] + [
        SampleRecord(f"a{i}", f"a{i}.png", SampleClass.attack(kinds[i % len(kinds)]),
                     countries[i % len(countries)], f"u{i}")
        for i in range(n_atk)
    ]
    return Manifest(records=tuple(records), name="synthetic")


@pytest.fixture
def report() -> MetricsReport:
    manifest = _manifest()
    rng = random.Random(21)
    scores = {
        r.sample_id: (0.5 + 0.5 * rng.random())
        if r.sample_class.is_bonafide
        else 0.6 * rng.random()
        for r in manifest.records
    }
    return evaluate_all(scores, manifest)


class TestFormatPercent:
    @pytest.mark.parametrize(
        ("fraction", "rendered"),
        [
            (0.40479, "40.48"),
            (1.0, "100"),
            (0.5770, "57.70"),
            (0.40475, "40.48"),  # half-up, not banker's rounding
            (0.0, "0.00"),
            (0.999999, "100"),
            (0.1134, "11.34"),
        ],
    )
    def test_rendering(self, fraction, rendered):
        assert format_percent(fraction) == rendered


class TestRankRendering:
    @pytest.fixture
    def table(self):
        rows = (
            RankRow(1, "dragons", 0.1134, 0.1321, 0.2439, 0.6104, 0.40479),
            RankRow(2, "PADINO-v2", 0.4564, 0.8350, 1.0, 1.0, 0.9670),
        )
        return RankedTable(track=Track.TRACK1, rows=rows)

    def test_text_table(self, table):
        text = render_rank_table(table)
        lines = text.splitlines()
        assert lines[0].split() == [
            "Rank", "Team", "EER", "BPCER10", "BPCER20", "BPCER100", "AVRank",
        ]
        assert "40.48" in lines[1]
        assert lines[2].split()[3:] == ["83.50", "100", "100", "96.70"]

    def test_csv(self, table):
        csv_text = rank_table_csv(table)
        assert csv_text.splitlines()[1] == "1,dragons,11.34,13.21,24.39,61.04,40.48"

    def test_file_name(self, table, tmp_path):
        path = export_rank_table(table, tmp_path)
        assert path.name == "rank_track1.csv"

    def test_empty_table_rejected(self):
        with pytest.raises(ReportError, match="empty rank table"):
            render_rank_table(RankedTable(track=Track.TRACK1, rows=()))

    def test_empty_team_name_rejected(self):
        table = RankedTable(
            track=Track.TRACK1, rows=(RankRow(1, "", 0.1, 0.1, 0.1, 0.1, 0.1),)
        )
        with pytest.raises(ReportError, match="participant"):
            render_rank_table(table)


class TestDetExport:
    def test_per_pais_writes_three_files(self, report, tmp_path):
        paths = export_det(report, "pais", tmp_path)
        assert sorted(p.name for p in paths) == [
            "det_pais_composite.csv",
            "det_pais_print.csv",
            "det_pais_screen.csv",
        ]

    def test_country_files(self, report, tmp_path):
        paths = export_det(report, "country", tmp_path)
        assert sorted(p.name for p in paths) == [
            "det_country_CHL.csv",
            "det_country_GTM.csv",
        ]

    def test_global_file_columns(self, report, tmp_path):
        (path,) = export_det(report, "global", tmp_path)
        lines = path.read_text().splitlines()
        assert lines[0] == "threshold,apcer,bpcer,apcer_probit,bpcer_probit"
        assert len(lines) == len(report.det) + 1

    def test_unknown_scope_lists_available(self, report, tmp_path):
        with pytest.raises(ReportError, match="available: global, pais, country"):
            export_det(report, "species", tmp_path)

    def test_scope_absent(self, tmp_path):
        bare = MetricsReport.from_operating_points(0.1, 0.1, 0.2, 0.3)
        with pytest.raises(ReportError, match="available: none"):
            export_det(bare, "global", tmp_path)

    def test_probit_clamping(self, report):
        n_atk = sum(report.n_attacks_by_pais.values())
        text = det_csv(report.det, n_atk, report.n_bonafide)
        first = text.splitlines()[1].split(",")
        # At threshold 0 the APCER is exactly 1: clamped to 1 - 1/(2N).
        assert float(first[1]) == 1.0
        assert float(first[3]) == pytest.approx(float(norm.ppf(1 - 1 / (2 * n_atk))))
        # BPCER 0 is clamped to 1/(2N) before the quantile.
        assert float(first[4]) == pytest.approx(float(norm.ppf(1 / (2 * report.n_bonafide))))

    def test_midpoint_probit_is_zero(self):
        from padeval.reportgen import _probit

        assert _probit(0.5, 100) == 0.0

    def test_rows_stay_monotonic(self, report, tmp_path):
        (path,) = export_det(report, "global", tmp_path)
        rows = [line.split(",") for line in path.read_text().splitlines()[1:]]
        apcers = [float(r[1]) for r in rows]
        bpcers = [float(r[2]) for r in rows]
        assert apcers == sorted(apcers, reverse=True)
        assert bpcers == sorted(bpcers)


class TestReportJson:
    def test_roundtrip_is_byte_identical(self, report):
        text = export_report(report)
        again = export_report(parse_report(text))
        assert again == text

    def test_av_rank_self_check(self, report):
        text = export_report(report)
        payload = json.loads(text)
        weighted = (
            0.2 * payload["bpcer_ap"]["10"]["bpcer"]
            + 0.3 * payload["bpcer_ap"]["20"]["bpcer"]
            + 0.5 * payload["bpcer_ap"]["100"]["bpcer"]
        )
        assert payload["av_rank"] == weighted

    def test_omitted_breakdown_key_absent(self):
        bare = MetricsReport.from_operating_points(0.1, 0.1, 0.2, 0.3)
        payload = json.loads(export_report(bare))
        assert "per_country" not in payload
        assert "per_pais" not in payload
        assert "counts" not in payload

    def test_worst_case_species_included_when_derivable(self, report):
        payload = json.loads(export_report(report))
        assert set(payload["bpcer_ap_worst_pais"]) == {"10", "20", "100"}

    def test_write_report_file_name(self, report, tmp_path):
        path = write_report(report, tmp_path, run_id="run7")
        assert path.name == "report_run7.json"
        assert parse_report(path.read_text()) == report

    def test_parse_rejects_garbage(self):
        with pytest.raises(ReportError, match="bad report JSON"):
            parse_report("{")
        with pytest.raises(ReportError, match="bad report JSON"):
            parse_report('{"eer": 0.1}')
