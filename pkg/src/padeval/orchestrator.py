"""Runs one evaluation: streams every manifest image to a scoring service.

Wire protocol (bit-exact contract, both sides):
  - Request: HTTP POST {base_url}/score, body = raw image bytes,
    header Content-Type: image/png or image/jpeg.
  - Success: status 200, body a JSON object {"score": <number>} with a
    finite number in [0, 1].
  - Anything else (status != 200, invalid JSON, missing field, non-finite,
    out of range, timeout) is a processing error: after the configured
    retries the sample scores 0 with the error flag set.

Candidate-side failures never abort a run; evaluator-side faults (an
unreadable local image, an unwritable checkpoint) do.
"""
from __future__ import annotations

import csv
import math
import threading
import time
import uuid
import warnings
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import requests

from .manifest import Manifest, SampleRecord
from .metrics import Score

SCORE_PATH = "/score"
SCORES_CSV_HEADER = ("sample_id", "score", "error_flag", "error_detail")
CONTENT_TYPES = {".png": "image/png", ".jpg": "image/jpeg", ".jpeg": "image/jpeg"}

# Fixed error-detail categories: outcomes must not embed run-specific text
# (addresses, ports) or score files would differ between identical runs.
DETAIL_TIMEOUT = "timeout"
DETAIL_TRANSPORT = "transport"
DETAIL_MALFORMED = "malformed body"
DETAIL_MISSING_SCORE = "missing score"
DETAIL_NON_FINITE = "non-finite score"
DETAIL_OUT_OF_RANGE = "score out of range"


class EvaluationError(RuntimeError):
    """Evaluator-side fault (bad local file, unsupported image type, bad checkpoint)."""


@dataclass(frozen=True)
class EndpointConfig:
    """Where and how to reach the candidate scoring service."""

    base_url: str
    timeout: float = 180.0
    max_retries: int = 2
    max_inflight: int = 4

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.max_inflight < 1:
            raise ValueError("max_inflight must be >= 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    @property
    def score_url(self) -> str:
        return self.base_url.rstrip("/") + SCORE_PATH


@dataclass(frozen=True)
class ScoreOutcome:
    """Result of scoring one sample, including the error->0 fold."""

    sample_id: str
    score: Score
    latency: float = 0.0
    error_detail: str | None = None

    def __post_init__(self) -> None:
        if (self.error_detail is not None) != self.score.error_flag:
            raise ValueError("error_detail present iff error_flag set")


@dataclass
class ScoreSet:
    """All outcomes of one evaluation run, keyed by sample_id."""

    run_id: str
    endpoint: EndpointConfig
    outcomes: dict[str, ScoreOutcome] = field(default_factory=dict)
    started: float = 0.0
    finished: float = 0.0

    def score_map(self) -> dict[str, float]:
        return {sid: o.score.value for sid, o in self.outcomes.items()}


def _content_type(path: Path) -> str:
    ctype = CONTENT_TYPES.get(path.suffix.lower())
    if ctype is None:
        raise EvaluationError(f"unsupported image type: {path.name}")
    return ctype


def _error_outcome(sample_id: str, detail: str, latency: float) -> ScoreOutcome:
    return ScoreOutcome(
        sample_id=sample_id,
        score=Score(0.0, error_flag=True),
        latency=latency,
        error_detail=detail,
    )


def score_one(
    sample: SampleRecord,
    cfg: EndpointConfig,
    root: str | Path = "",
    session: requests.Session | None = None,
) -> ScoreOutcome:
    """Score one sample, retrying failures before folding them to 0.

    Only evaluator-side faults escape (unreadable image, unsupported type);
    every candidate-side failure becomes an error-flagged zero outcome.
    """
    path = Path(root) / sample.path
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise EvaluationError(f"cannot read image for {sample.sample_id!r}: {exc}")
    headers = {"Content-Type": _content_type(path)}
    post = session.post if session is not None else requests.post

    detail = DETAIL_TRANSPORT
    start = time.monotonic()
    for _ in range(cfg.max_retries + 1):
        try:
            resp = post(cfg.score_url, data=data, headers=headers, timeout=cfg.timeout)
        except requests.Timeout:
            detail = DETAIL_TIMEOUT
            continue
        except requests.RequestException:
            detail = DETAIL_TRANSPORT
            continue
        if resp.status_code != 200:
            detail = f"http status {resp.status_code}"
            continue
        try:
            body = resp.json()
        except ValueError:
            detail = DETAIL_MALFORMED
            continue
        if not isinstance(body, dict) or "score" not in body:
            detail = DETAIL_MISSING_SCORE
            continue
        raw = body["score"]
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            detail = DETAIL_MALFORMED
            continue
        value = float(raw)
        if not math.isfinite(value):
            detail = DETAIL_NON_FINITE
            continue
        if not (0.0 <= value <= 1.0):
            detail = DETAIL_OUT_OF_RANGE
            continue
        return ScoreOutcome(
            sample_id=sample.sample_id,
            score=Score(value),
            latency=time.monotonic() - start,
        )
    return _error_outcome(sample.sample_id, detail, time.monotonic() - start)


def run_evaluation(
    manifest: Manifest,
    cfg: EndpointConfig,
    *,
    run_id: str | None = None,
    checkpoint: str | Path | None = None,
    resume_from: str | Path | None = None,
) -> ScoreSet:
    """Score every manifest sample and assemble a complete ScoreSet.

    Requests run concurrently with at most ``cfg.max_inflight`` outstanding;
    outcomes are keyed by sample_id, so the assembled set is identical
    regardless of completion order. When ``checkpoint`` is given, each
    completed outcome is appended to that CSV immediately; passing the same
    file as ``resume_from`` on a rerun skips already-scored samples.
    """
    prior: dict[str, ScoreOutcome] = {}
    if resume_from is not None and Path(resume_from).exists():
        prior = read_scores_csv(resume_from)
        extras = set(prior) - {r.sample_id for r in manifest.records}
        if extras:
            warnings.warn(
                f"resume file has {len(extras)} sample(s) not in the manifest; ignored",
                stacklevel=2,
            )
            prior = {k: v for k, v in prior.items() if k not in extras}

    todo = [r for r in manifest.records if r.sample_id not in prior]
    outcomes = dict(prior)
    started = time.time()

    ckpt_file = None
    ckpt_writer = None
    if checkpoint is not None:
        ckpt_path = Path(checkpoint)
        fresh = not ckpt_path.exists() or ckpt_path.stat().st_size == 0
        try:
            ckpt_file = open(ckpt_path, "a", newline="", encoding="utf-8")
        except OSError as exc:
            raise EvaluationError(f"cannot open checkpoint {ckpt_path}: {exc}")
        ckpt_writer = csv.writer(ckpt_file, lineterminator="\n")
        if fresh:
            ckpt_writer.writerow(SCORES_CSV_HEADER)
            ckpt_file.flush()

    local = threading.local()

    def worker(record: SampleRecord) -> ScoreOutcome:
        session = getattr(local, "session", None)
        if session is None:
            session = requests.Session()
            local.session = session
        return score_one(record, cfg, root=manifest.root, session=session)

    try:
        with ThreadPoolExecutor(max_workers=cfg.max_inflight) as pool:
            futures = [pool.submit(worker, record) for record in todo]
            for future in as_completed(futures):
                outcome = future.result()
                outcomes[outcome.sample_id] = outcome
                if ckpt_writer is not None:
                    ckpt_writer.writerow(_csv_row(outcome))
                    ckpt_file.flush()
    finally:
        if ckpt_file is not None:
            ckpt_file.close()

    assert len(outcomes) == len(manifest.records)
    return ScoreSet(
        run_id=run_id or uuid.uuid4().hex[:12],
        endpoint=cfg,
        outcomes=outcomes,
        started=started,
        finished=time.time(),
    )


def _csv_row(outcome: ScoreOutcome) -> tuple[str, str, str, str]:
    return (
        outcome.sample_id,
        repr(outcome.score.value),
        "true" if outcome.score.error_flag else "false",
        outcome.error_detail or "",
    )


def write_scores_csv(
    outcomes: Mapping[str, ScoreOutcome],
    path: str | Path,
    order: Sequence[str] | None = None,
) -> None:
    """Write outcomes as the scores CSV; ``order`` fixes the row order
    (manifest order for reproducible files), defaulting to sorted ids."""
    ids = list(order) if order is not None else sorted(outcomes)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SCORES_CSV_HEADER)
        for sid in ids:
            writer.writerow(_csv_row(outcomes[sid]))


def read_scores_csv(path: str | Path) -> dict[str, ScoreOutcome]:
    """Read a scores CSV back into outcomes (latency is not persisted)."""
    outcomes: dict[str, ScoreOutcome] = {}
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows or tuple(rows[0]) != SCORES_CSV_HEADER:
        raise EvaluationError(f"{path}: expected header {','.join(SCORES_CSV_HEADER)}")
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(SCORES_CSV_HEADER):
            # Tolerate a torn trailing line from an interrupted checkpoint.
            if lineno == len(rows):
                warnings.warn(f"{path}: dropping torn final line {lineno}")
                continue
            raise EvaluationError(f"{path}: line {lineno}: expected 4 columns")
        sample_id, value, flag, detail = row
        outcomes[sample_id] = ScoreOutcome(
            sample_id=sample_id,
            score=Score(float(value), error_flag=(flag == "true")),
            error_detail=detail or None,
        )
    return outcomes
