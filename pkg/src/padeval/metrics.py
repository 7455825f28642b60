"""ISO/IEC 30107-3 detection metrics over bounded [0, 1] scores.

Scores follow the scoring-service convention: 0 means total confidence the
sample is an attack, 1 total confidence it is bona fide. A sample is decided
bona fide iff its score is >= the decision threshold, so the documented
error score of 0 is always rejected at any positive threshold.

All rates are fractions in [0, 1]; percent formatting happens only in
rendering. Every operation here is a pure function over immutable inputs.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .manifest import Manifest, PaisKind

#: Upper sentinel threshold: the smallest float above 1.0. At this threshold
#: every score is rejected (APCER 0, BPCER 1); at 0.0 every score is accepted.
THRESHOLD_ABOVE_ONE = math.nextafter(1.0, 2.0)

#: The three reported security operating points: APCER targets 100/AP percent.
BPCER_AP_POINTS = (10, 20, 100)

#: Ranking weights for BPCER10 / BPCER20 / BPCER100 (they sum to 1).
AV_RANK_WEIGHTS = {10: 0.2, 20: 0.3, 100: 0.5}


class MetricsError(ValueError):
    """A metric was requested over an invalid or insufficient score set."""


class MetricsWarning(UserWarning):
    """Non-fatal evaluation issue, e.g. a breakdown bucket with no attacks."""


class Decision(enum.Enum):
    BONA_FIDE = "bonafide"
    ATTACK = "attack"


def decide(score: float, threshold: float) -> Decision:
    """Classify one score: bona fide iff score >= threshold."""
    return Decision.BONA_FIDE if score >= threshold else Decision.ATTACK


@dataclass(frozen=True)
class Score:
    """One per-sample score; error outcomes are pinned to exactly 0."""

    value: float
    error_flag: bool = False

    def __post_init__(self) -> None:
        if not (0.0 <= self.value <= 1.0):
            raise MetricsError(f"score {self.value!r} out of [0, 1]")
        if self.error_flag and self.value != 0.0:
            raise MetricsError("error-flagged score must be exactly 0")


def _check_unit_range(values: Sequence[float], what: str) -> None:
    arr = np.asarray(values, dtype=float)
    if arr.size and (np.isnan(arr).any() or arr.min() < 0.0 or arr.max() > 1.0):
        raise MetricsError(f"{what} scores must lie in [0, 1]")


@dataclass(frozen=True)
class ScorePartition:
    """Bona fide scores plus attack scores grouped by species."""

    bonafide: tuple[float, ...]
    attacks: Mapping[PaisKind, tuple[float, ...]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "bonafide", tuple(float(v) for v in self.bonafide))
        object.__setattr__(
            self,
            "attacks",
            {k: tuple(float(v) for v in v_list) for k, v_list in self.attacks.items()},
        )
        if not self.bonafide:
            raise MetricsError("no bona fide samples")
        _check_unit_range(self.bonafide, "bona fide")
        for kind, values in self.attacks.items():
            _check_unit_range(values, kind.value)

    def attack_scores(self, selector: PaisKind | None = None) -> tuple[float, ...]:
        """Scores for one species, or all species pooled when selector is None."""
        if selector is not None:
            return self.attacks.get(selector, ())
        pooled: list[float] = []
        for kind in PaisKind:
            pooled.extend(self.attacks.get(kind, ()))
        return tuple(pooled)


class DetPoint(NamedTuple):
    threshold: float
    apcer: float
    bpcer: float


@dataclass(frozen=True)
class DetCurve:
    """Error trade-off sampled at every distinct score plus both sentinels.

    Thresholds are strictly increasing; apcer is non-increasing and bpcer
    non-decreasing along the curve. The first point is always
    (0.0, 1.0, 0.0) and the last (just above 1.0, 0.0, 1.0).
    """

    thresholds: tuple[float, ...]
    apcer: tuple[float, ...]
    bpcer: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.thresholds)

    def points(self) -> Iterator[DetPoint]:
        return (
            DetPoint(t, a, b)
            for t, a, b in zip(self.thresholds, self.apcer, self.bpcer)
        )

    def to_dict(self) -> dict:
        return {
            "thresholds": list(self.thresholds),
            "apcer": list(self.apcer),
            "bpcer": list(self.bpcer),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "DetCurve":
        return cls(
            thresholds=tuple(d["thresholds"]),
            apcer=tuple(d["apcer"]),
            bpcer=tuple(d["bpcer"]),
        )


def apcer(attack_scores: Sequence[float], threshold: float) -> float:
    """Fraction of attack presentations accepted as bona fide at the threshold."""
    if len(attack_scores) == 0:
        raise MetricsError("no attack samples for species")
    arr = np.asarray(attack_scores, dtype=float)
    return float(np.count_nonzero(arr >= threshold) / arr.size)


def bpcer(bonafide_scores: Sequence[float], threshold: float) -> float:
    """Fraction of bona fide presentations rejected as attacks at the threshold."""
    if len(bonafide_scores) == 0:
        raise MetricsError("no bona fide samples")
    arr = np.asarray(bonafide_scores, dtype=float)
    return float(np.count_nonzero(arr < threshold) / arr.size)


def det_curve(
    partition: ScorePartition, selector: PaisKind | None = None
) -> DetCurve:
    """Sweep all candidate thresholds and tabulate (threshold, APCER, BPCER).

    Candidate thresholds are the distinct observed scores plus the sentinels
    0 and the first float above 1: the error rates are step functions that
    only change at observed values, so this sweep is exhaustive.
    """
    bf = np.sort(np.asarray(partition.bonafide, dtype=float))
    atk = np.sort(np.asarray(partition.attack_scores(selector), dtype=float))
    if atk.size == 0:
        kind = "pooled" if selector is None else selector.value
        raise MetricsError(f"no attack samples for species ({kind})")
    thresholds = np.unique(
        np.concatenate((bf, atk, np.array([0.0, THRESHOLD_ABOVE_ONE])))
    )
    apcer_values = (atk.size - np.searchsorted(atk, thresholds, side="left")) / atk.size
    bpcer_values = np.searchsorted(bf, thresholds, side="left") / bf.size
    return DetCurve(
        thresholds=tuple(thresholds.tolist()),
        apcer=tuple(apcer_values.tolist()),
        bpcer=tuple(bpcer_values.tolist()),
    )


def _eer_from_curve(curve: DetCurve) -> tuple[float, float]:
    # Exact equality first, at the smallest such threshold.
    for t, a, b in curve.points():
        if a == b:
            return a, t
    # Otherwise apcer - bpcer flips sign exactly once (it is non-increasing
    # from +1 to -1); interpolate both rates linearly between the bracketing
    # points and return their crossing.
    pts = list(curve.points())
    for (t0, a0, b0), (t1, a1, b1) in zip(pts, pts[1:]):
        d0 = a0 - b0
        d1 = a1 - b1
        if d0 > 0.0 and d1 < 0.0:
            tau = t0 + d0 * (t1 - t0) / (d0 - d1)
            value = a0 + (a1 - a0) * (tau - t0) / (t1 - t0)
            return value, tau
    raise MetricsError("no error-rate crossing found")  # pragma: no cover


def eer(
    partition: ScorePartition, selector: PaisKind | None = None
) -> tuple[float, float]:
    """Equal error rate and its threshold.

    Returns the exact operating point where APCER == BPCER when one exists
    among the candidate thresholds (smallest such threshold wins); otherwise
    linearly interpolates both rates between the two bracketing curve points.
    """
    return _eer_from_curve(det_curve(partition, selector))


def _bpcer_ap_from_curve(curve: DetCurve, ap: int) -> tuple[float, float]:
    target = 1.0 / ap
    for t, a, b in curve.points():
        if a <= target:
            return b, t
    raise MetricsError("unreachable: APCER is 0 at the upper sentinel")  # pragma: no cover


def bpcer_at_apcer(
    partition: ScorePartition, selector: PaisKind | None = None, ap: int = 10
) -> tuple[float, float]:
    """BPCER at the security operating point where APCER first reaches 100/AP %.

    Exact APCER equality is rarely attainable on discrete scores, so this is
    the BPCER at the smallest candidate threshold with APCER <= 1/ap (the
    security-conservative reading of the operating point).
    """
    if ap not in BPCER_AP_POINTS:
        raise MetricsError(f"ap must be one of {BPCER_AP_POINTS}, got {ap!r}")
    return _bpcer_ap_from_curve(det_curve(partition, selector), ap)


def av_rank(b10: float, b20: float, b100: float) -> float:
    """Weighted ranking score 0.2*BPCER10 + 0.3*BPCER20 + 0.5*BPCER100 (lowest wins)."""
    for name, value in (("b10", b10), ("b20", b20), ("b100", b100)):
        if not (0.0 <= value <= 1.0):
            raise MetricsError(f"{name}={value!r} out of [0, 1]")
    return (
        AV_RANK_WEIGHTS[10] * b10
        + AV_RANK_WEIGHTS[20] * b20
        + AV_RANK_WEIGHTS[100] * b100
    )


@dataclass(frozen=True)
class OperatingPoint:
    """A BPCER value and the threshold it was read at (None if unknown)."""

    bpcer: float
    threshold: float | None = None

    def to_dict(self) -> dict:
        d: dict = {"bpcer": self.bpcer}
        if self.threshold is not None:
            d["threshold"] = self.threshold
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "OperatingPoint":
        return cls(bpcer=d["bpcer"], threshold=d.get("threshold"))


@dataclass(frozen=True)
class SubReport:
    """Metrics for one breakdown bucket (one species, or one country)."""

    eer: float
    eer_threshold: float | None
    bpcer_ap: Mapping[int, OperatingPoint]
    det: DetCurve | None = None
    n_bonafide: int | None = None
    n_attack: int | None = None

    def to_dict(self) -> dict:
        d: dict = {
            "eer": self.eer,
            "bpcer_ap": {str(ap): op.to_dict() for ap, op in self.bpcer_ap.items()},
        }
        if self.eer_threshold is not None:
            d["eer_threshold"] = self.eer_threshold
        if self.det is not None:
            d["det"] = self.det.to_dict()
        if self.n_bonafide is not None:
            d["n_bonafide"] = self.n_bonafide
        if self.n_attack is not None:
            d["n_attack"] = self.n_attack
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "SubReport":
        return cls(
            eer=d["eer"],
            eer_threshold=d.get("eer_threshold"),
            bpcer_ap={
                int(ap): OperatingPoint.from_dict(op)
                for ap, op in d["bpcer_ap"].items()
            },
            det=DetCurve.from_dict(d["det"]) if "det" in d else None,
            n_bonafide=d.get("n_bonafide"),
            n_attack=d.get("n_attack"),
        )


@dataclass(frozen=True)
class MetricsReport:
    """Full evaluation result: global metrics plus per-species and per-country breakdowns.

    Global metrics pool all attack species; each species sub-report uses all
    bona fide scores against that species only; each country sub-report
    restricts both sides to the country. av_rank is always the weighted sum
    of the three global BPCER_AP values (enforced on construction).
    """

    eer: float
    eer_threshold: float | None
    bpcer_ap: Mapping[int, OperatingPoint]
    av_rank: float
    det: DetCurve | None = None
    per_pais: Mapping[PaisKind, SubReport] = field(default_factory=dict)
    per_country: Mapping[str, SubReport] = field(default_factory=dict)
    n_bonafide: int | None = None
    n_attacks_by_pais: Mapping[PaisKind, int] | None = None

    def __post_init__(self) -> None:
        expected = av_rank(*(self.bpcer_ap[ap].bpcer for ap in BPCER_AP_POINTS))
        if self.av_rank != expected:
            raise MetricsError(
                f"av_rank {self.av_rank!r} != weighted BPCER_AP sum {expected!r}"
            )

    @classmethod
    def from_operating_points(
        cls, eer: float, b10: float, b20: float, b100: float
    ) -> "MetricsReport":
        """Build a minimal report from already-known operating-point values
        (e.g. a published leaderboard row); thresholds and curves are unknown."""
        ops = {
            10: OperatingPoint(b10),
            20: OperatingPoint(b20),
            100: OperatingPoint(b100),
        }
        return cls(
            eer=eer,
            eer_threshold=None,
            bpcer_ap=ops,
            av_rank=av_rank(b10, b20, b100),
        )

    def worst_pais_bpcer_ap(self) -> dict[int, OperatingPoint] | None:
        """Operating points under the worst-case-species APCER reading.

        The worst-case APCER over species reaches the target exactly when
        every species does, i.e. at the largest per-species threshold; all
        species sub-reports share the bona fide set, so the worst-case BPCER
        is the sub-report value at that threshold. None when species
        breakdowns (or their thresholds) are unavailable.
        """
        if not self.per_pais:
            return None
        worst: dict[int, OperatingPoint] = {}
        for ap in BPCER_AP_POINTS:
            best_op: OperatingPoint | None = None
            for sub in self.per_pais.values():
                op = sub.bpcer_ap.get(ap)
                if op is None or op.threshold is None:
                    return None
                if best_op is None or op.threshold > best_op.threshold:
                    best_op = op
            worst[ap] = best_op
        return worst

    def to_dict(self) -> dict:
        d: dict = {
            "eer": self.eer,
            "bpcer_ap": {str(ap): op.to_dict() for ap, op in self.bpcer_ap.items()},
            "av_rank": self.av_rank,
        }
        if self.eer_threshold is not None:
            d["eer_threshold"] = self.eer_threshold
        if self.det is not None:
            d["det"] = self.det.to_dict()
        if self.per_pais:
            d["per_pais"] = {k.value: v.to_dict() for k, v in self.per_pais.items()}
        if self.per_country:
            d["per_country"] = {k: v.to_dict() for k, v in self.per_country.items()}
        if self.n_bonafide is not None:
            d["counts"] = {
                "bonafide": self.n_bonafide,
                "attacks": {
                    k.value: v for k, v in (self.n_attacks_by_pais or {}).items()
                },
            }
        worst = self.worst_pais_bpcer_ap()
        if worst is not None:
            # Derived from per_pais; written for consumers, ignored on parse.
            d["bpcer_ap_worst_pais"] = {
                str(ap): op.to_dict() for ap, op in worst.items()
            }
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "MetricsReport":
        counts = d.get("counts")
        return cls(
            eer=d["eer"],
            eer_threshold=d.get("eer_threshold"),
            bpcer_ap={
                int(ap): OperatingPoint.from_dict(op)
                for ap, op in d["bpcer_ap"].items()
            },
            av_rank=d["av_rank"],
            det=DetCurve.from_dict(d["det"]) if "det" in d else None,
            per_pais={
                PaisKind(k): SubReport.from_dict(v)
                for k, v in d.get("per_pais", {}).items()
            },
            per_country={
                k: SubReport.from_dict(v) for k, v in d.get("per_country", {}).items()
            },
            n_bonafide=counts["bonafide"] if counts else None,
            n_attacks_by_pais=(
                {PaisKind(k): v for k, v in counts["attacks"].items()}
                if counts
                else None
            ),
        )


def _analyze(bonafide: Sequence[float], attacks: Mapping[PaisKind, tuple[float, ...]],
             selector: PaisKind | None) -> SubReport:
    partition = ScorePartition(bonafide=tuple(bonafide), attacks=attacks)
    curve = det_curve(partition, selector)
    eer_value, eer_thr = _eer_from_curve(curve)
    ops = {}
    for ap in BPCER_AP_POINTS:
        b, t = _bpcer_ap_from_curve(curve, ap)
        ops[ap] = OperatingPoint(bpcer=b, threshold=t)
    return SubReport(
        eer=eer_value,
        eer_threshold=eer_thr,
        bpcer_ap=ops,
        det=curve,
        n_bonafide=len(bonafide),
        n_attack=len(partition.attack_scores(selector)),
    )


def evaluate_all(scores: Mapping[str, float], manifest: Manifest) -> MetricsReport:
    """Compute the full metrics report for one score set over one manifest.

    ``scores`` maps every manifest sample_id to its [0, 1] score (error
    outcomes are already pinned to 0 upstream). A species or country with no
    attack (or, for countries, no bona fide) samples is omitted from the
    breakdowns with a MetricsWarning; a missing score is an error naming the
    sample.
    """
    missing = [r.sample_id for r in manifest.records if r.sample_id not in scores]
    if missing:
        shown = ", ".join(repr(s) for s in missing[:5])
        raise MetricsError(f"missing score for {len(missing)} sample(s): {shown}")

    bonafide: list[float] = []
    by_pais: dict[PaisKind, list[float]] = {}
    country_bf: dict[str, list[float]] = {}
    country_atk: dict[str, dict[PaisKind, list[float]]] = {}
    for r in manifest.records:
        value = float(scores[r.sample_id])
        if r.sample_class.is_bonafide:
            bonafide.append(value)
            country_bf.setdefault(r.country, []).append(value)
        else:
            kind = r.sample_class.pais
            by_pais.setdefault(kind, []).append(value)
            country_atk.setdefault(r.country, {}).setdefault(kind, []).append(value)

    if not bonafide:
        raise MetricsError("no bona fide samples")
    if not by_pais:
        raise MetricsError("no attack samples")
    attacks = {k: tuple(v) for k, v in by_pais.items()}

    global_sub = _analyze(bonafide, attacks, selector=None)

    per_pais: dict[PaisKind, SubReport] = {}
    for kind in PaisKind:
        if attacks.get(kind):
            per_pais[kind] = _analyze(bonafide, attacks, selector=kind)
        else:
            warnings.warn(
                f"no {kind.value} attack samples; omitted from species breakdown",
                MetricsWarning,
                stacklevel=2,
            )

    per_country: dict[str, SubReport] = {}
    countries = sorted(set(country_bf) | set(country_atk))
    for country in countries:
        bf_c = country_bf.get(country)
        atk_c = country_atk.get(country)
        if not bf_c or not atk_c:
            side = "bona fide" if not bf_c else "attack"
            warnings.warn(
                f"country {country} has no {side} samples; omitted from breakdown",
                MetricsWarning,
                stacklevel=2,
            )
            continue
        per_country[country] = _analyze(
            bf_c, {k: tuple(v) for k, v in atk_c.items()}, selector=None
        )

    return MetricsReport(
        eer=global_sub.eer,
        eer_threshold=global_sub.eer_threshold,
        bpcer_ap=global_sub.bpcer_ap,
        av_rank=av_rank(*(global_sub.bpcer_ap[ap].bpcer for ap in BPCER_AP_POINTS)),
        det=global_sub.det,
        per_pais=per_pais,
        per_country=per_country,
        n_bonafide=len(bonafide),
        n_attacks_by_pais={k: len(v) for k, v in attacks.items()},
    )
