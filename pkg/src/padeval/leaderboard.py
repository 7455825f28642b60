"""Submission persistence and ranked tables.

Submissions live in an append-only JSON-lines store (one record per line,
UTF-8); by convention one file per track, though records carry their track.
Ranking keeps only each participant's best submission (lowest av_rank, ties
broken by lower EER, then earlier submission), interleaves any baseline
rows, and orders ascending by av_rank.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .metrics import MetricsReport


class LeaderboardError(ValueError):
    """Store or ranking contract violation (duplicate id, bad record, empty table)."""


class Track(enum.Enum):
    TRACK1 = "track1"
    TRACK2 = "track2"


def _parse_when(submitted_at: str) -> datetime:
    try:
        when = datetime.fromisoformat(submitted_at)
    except ValueError:
        raise LeaderboardError(f"bad submitted_at timestamp: {submitted_at!r}")
    if when.tzinfo is None:
        when = when.replace(tzinfo=timezone.utc)
    return when


def now_utc() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass(frozen=True)
class SubmissionRecord:
    """One stored evaluation result for one participant."""

    submission_id: str
    participant: str
    track: Track
    submitted_at: str  # ISO-8601
    report: MetricsReport
    scores_ref: str | None = None

    def __post_init__(self) -> None:
        if not self.submission_id:
            raise LeaderboardError("empty submission_id")
        if not self.participant:
            raise LeaderboardError("empty participant")
        _parse_when(self.submitted_at)

    def to_dict(self) -> dict:
        d: dict = {
            "submission_id": self.submission_id,
            "participant": self.participant,
            "track": self.track.value,
            "submitted_at": self.submitted_at,
            "report": self.report.to_dict(),
        }
        if self.scores_ref is not None:
            d["scores_ref"] = self.scores_ref
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SubmissionRecord":
        return cls(
            submission_id=d["submission_id"],
            participant=d["participant"],
            track=Track(d["track"]),
            submitted_at=d["submitted_at"],
            report=MetricsReport.from_dict(d["report"]),
            scores_ref=d.get("scores_ref"),
        )


class SubmissionStore:
    """Append-only JSON-lines store. Single writer; readers see a prefix."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._known_ids: set[str] | None = None

    def _ids(self) -> set[str]:
        if self._known_ids is None:
            self._known_ids = {r.submission_id for r in self.load()}
        return self._known_ids

    def append(self, record: SubmissionRecord) -> str:
        """Durably append one record; rejects duplicate submission ids."""
        if record.submission_id in self._ids():
            raise LeaderboardError(
                f"duplicate submission_id {record.submission_id!r}"
            )
        line = json.dumps(record.to_dict(), sort_keys=True)
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(line + "\n")
            f.flush()
        self._ids().add(record.submission_id)
        return record.submission_id

    def load(self) -> list[SubmissionRecord]:
        if not self.path.exists():
            return []
        records = []
        with open(self.path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    records.append(SubmissionRecord.from_dict(json.loads(line)))
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    raise LeaderboardError(
                        f"{self.path}: line {lineno}: bad record: {exc}"
                    )
        return records


def _best_key(record: SubmissionRecord):
    return (
        record.report.av_rank,
        record.report.eer,
        _parse_when(record.submitted_at),
        record.submission_id,
    )


def best_per_participant(
    records: Iterable[SubmissionRecord], track: Track
) -> list[SubmissionRecord]:
    """Each participant's best submission on the track, insertion-order independent."""
    best: dict[str, SubmissionRecord] = {}
    for record in records:
        if record.track is not track:
            continue
        current = best.get(record.participant)
        if current is None or _best_key(record) < _best_key(current):
            best[record.participant] = record
    return sorted(best.values(), key=_best_key)


@dataclass(frozen=True)
class RankRow:
    rank: int
    participant: str
    eer: float
    bpcer10: float
    bpcer20: float
    bpcer100: float
    av_rank: float


@dataclass(frozen=True)
class RankedTable:
    track: Track
    rows: tuple[RankRow, ...]


def rank_table(
    records: Iterable[SubmissionRecord],
    track: Track,
    include_baselines: Sequence[SubmissionRecord] = (),
) -> RankedTable:
    """Rank best-per-participant submissions plus baseline rows by av_rank.

    Baselines are ordinary records (reserved participant names such as
    "Baseline-1") and rank alongside participants.
    """
    contenders = best_per_participant(records, track) + [
        b for b in include_baselines if b.track is track
    ]
    if not contenders:
        raise LeaderboardError(f"no submissions or baselines for {track.value}")
    names = [c.participant for c in contenders]
    if len(names) != len(set(names)):
        raise LeaderboardError("duplicate participant between store and baselines")
    contenders.sort(key=lambda r: _best_key(r) + (r.participant,))
    rows = []
    for position, record in enumerate(contenders, start=1):
        report = record.report
        rows.append(
            RankRow(
                rank=position,
                participant=record.participant,
                eer=report.eer,
                bpcer10=report.bpcer_ap[10].bpcer,
                bpcer20=report.bpcer_ap[20].bpcer,
                bpcer100=report.bpcer_ap[100].bpcer,
                av_rank=report.av_rank,
            )
        )
    return RankedTable(track=track, rows=tuple(rows))
