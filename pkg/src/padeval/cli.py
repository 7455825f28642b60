"""Command-line entry point wiring the evaluation workflows together.

Exit codes: 0 success, 2 usage (argparse), 3 missing/unreadable files,
4 data-contract violations from inner modules, 5 evaluation runtime faults.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import corpusgen, leaderboard, orchestrator, reportgen
from .corpusgen import CorpusError
from .leaderboard import LeaderboardError, SubmissionStore, Track
from .manifest import ManifestError, parse_manifest, validate_manifest
from .metrics import MetricsError, evaluate_all
from .orchestrator import EndpointConfig, EvaluationError
from .reportgen import ReportError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_CONTRACT = 4
EXIT_RUNTIME = 5

WIRE_HELP = """\
scoring wire protocol (both sides):
  request   POST {base_url}/score, body = raw image bytes,
            Content-Type: image/png or image/jpeg
  success   status 200, body {"score": <finite number in [0, 1]>}
  failure   anything else (bad status, invalid JSON, missing field,
            non-finite, out of range, timeout) scores 0 with the error flag
"""


def _load_manifest(path: Path):
    text = path.read_text(encoding="utf-8")
    return parse_manifest(text, name=path.stem, root=str(path.parent))


def _cmd_gen_corpus(args: argparse.Namespace) -> int:
    if args.spec is not None:
        spec = corpusgen.spec_from_json(Path(args.spec).read_text(encoding="utf-8"))
    else:
        spec = corpusgen.track1_spec()
    if args.seed is not None or args.image_size is not None:
        spec = corpusgen.CorpusSpec(
            name=spec.name,
            classes=spec.classes,
            countries=spec.countries,
            subjects=spec.subjects,
            image_size=tuple(args.image_size) if args.image_size else spec.image_size,
            seed=args.seed if args.seed is not None else spec.seed,
        )
    manifest = corpusgen.gen_corpus(spec, args.out)
    report = validate_manifest(manifest)
    sys.stdout.write(report.to_text())
    return EXIT_OK if report.ok else EXIT_CONTRACT


def _cmd_evaluate(args: argparse.Namespace) -> int:
    manifest = _load_manifest(Path(args.manifest))
    cfg = EndpointConfig(
        base_url=args.endpoint,
        timeout=args.timeout,
        max_retries=args.retries,
        max_inflight=args.inflight,
    )
    out = Path(args.out)
    score_set = orchestrator.run_evaluation(
        manifest,
        cfg,
        checkpoint=out,
        resume_from=args.resume,
    )
    # Rewrite in manifest order so identical runs produce identical files.
    orchestrator.write_scores_csv(
        score_set.outcomes, out, order=[r.sample_id for r in manifest.records]
    )
    errors = sum(1 for o in score_set.outcomes.values() if o.score.error_flag)
    print(f"scored {len(score_set.outcomes)} samples ({errors} errors) -> {out}")
    return EXIT_OK


def _cmd_metrics(args: argparse.Namespace) -> int:
    manifest = _load_manifest(Path(args.manifest))
    outcomes = orchestrator.read_scores_csv(args.scores)
    scores = {sid: o.score.value for sid, o in outcomes.items()}
    report = evaluate_all(scores, manifest)
    run_id = args.run_id or Path(args.scores).stem
    out = Path(args.out)
    report_path = reportgen.write_report(report, out, run_id)
    written = [report_path]
    written += reportgen.export_det(report, "global", out)
    if report.per_pais:
        written += reportgen.export_det(report, "pais", out)
    if report.per_country:
        written += reportgen.export_det(report, "country", out)
    print(
        f"eer {reportgen.format_percent(report.eer)}%  "
        f"av_rank {reportgen.format_percent(report.av_rank)}%  "
        f"({len(written)} files in {out})"
    )
    return EXIT_OK


def _cmd_submit(args: argparse.Namespace) -> int:
    report_text = Path(args.report).read_text(encoding="utf-8")
    report = reportgen.parse_report(report_text)
    track = Track(args.track)
    payload = "\n".join(
        [args.participant, track.value, args.scores or "", report_text]
    )
    submission_id = args.id or hashlib.sha256(payload.encode()).hexdigest()[:12]
    record = leaderboard.SubmissionRecord(
        submission_id=submission_id,
        participant=args.participant,
        track=track,
        submitted_at=args.submitted_at or leaderboard.now_utc(),
        report=report,
        scores_ref=args.scores,
    )
    SubmissionStore(args.store).append(record)
    print(submission_id)
    return EXIT_OK


def _baseline_record(arg: str, track: Track) -> leaderboard.SubmissionRecord:
    name, sep, path = arg.partition("=")
    if not sep:
        name, path = Path(arg).stem, arg
    report = reportgen.parse_report(Path(path).read_text(encoding="utf-8"))
    return leaderboard.SubmissionRecord(
        submission_id=f"baseline-{name}",
        participant=name,
        track=track,
        submitted_at="1970-01-01T00:00:00+00:00",
        report=report,
    )


def _cmd_rank(args: argparse.Namespace) -> int:
    records = SubmissionStore(args.store).load()
    if args.track:
        track = Track(args.track)
    else:
        tracks = {r.track for r in records}
        if len(tracks) != 1:
            raise LeaderboardError(
                "store holds multiple tracks (or none); pass --track"
            )
        track = tracks.pop()
    baselines = [_baseline_record(b, track) for b in args.baseline]
    table = leaderboard.rank_table(records, track, include_baselines=baselines)
    out = Path(args.out)
    if out.is_dir():
        path = reportgen.export_rank_table(table, out)
    else:
        path = out
        path.write_text(reportgen.rank_table_csv(table), encoding="utf-8")
    sys.stdout.write(reportgen.render_rank_table(table))
    print(f"-> {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="padeval",
        description="Evaluation harness for ID-card presentation-attack detection.",
        epilog=WIRE_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="generate a synthetic labeled corpus")
    p.add_argument("--spec", help="corpus spec JSON (default: built-in Track-1 mix)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override the spec seed")
    p.add_argument(
        "--image-size", type=int, nargs=2, metavar=("W", "H"),
        help="override the spec image size",
    )
    p.set_defaults(func=_cmd_gen_corpus)

    p = sub.add_parser("evaluate", help="score every manifest image over HTTP")
    p.add_argument("--manifest", required=True)
    p.add_argument("--endpoint", required=True, help="scoring service base URL")
    p.add_argument("--timeout", type=float, default=180.0, help="per-request seconds")
    p.add_argument("--retries", type=int, default=2)
    p.add_argument("--inflight", type=int, default=4, help="max concurrent requests")
    p.add_argument("--resume", help="scores CSV of a previous partial run")
    p.add_argument("--out", required=True, help="scores CSV to write")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("metrics", help="compute the metrics report for a scores CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--run-id", help="report file id (default: scores file stem)")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("submit", help="append a report to a submission store")
    p.add_argument("--store", required=True, help="JSON-lines store path")
    p.add_argument("--participant", required=True)
    p.add_argument("--track", required=True, choices=[t.value for t in Track])
    p.add_argument("--report", required=True, help="report JSON path")
    p.add_argument("--scores", help="scores CSV reference")
    p.add_argument("--id", help="explicit submission id (default: content hash)")
    p.add_argument("--submitted-at", help="ISO timestamp (default: now)")
    p.set_defaults(func=_cmd_submit)

    p = sub.add_parser("rank", help="render the ranked table for a store")
    p.add_argument("--store", required=True)
    p.add_argument("--track", choices=[t.value for t in Track])
    p.add_argument(
        "--baseline", action="append", default=[], metavar="[NAME=]REPORT.json",
        help="baseline report to rank alongside participants (repeatable)",
    )
    p.add_argument("--out", required=True, help="CSV path or directory")
    p.set_defaults(func=_cmd_rank)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ManifestError, MetricsError, LeaderboardError, ReportError, CorpusError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except EvaluationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
