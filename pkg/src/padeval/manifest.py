"""Dataset manifests: sample taxonomy, CSV parsing, validation, filtering.

A manifest is a CSV file with the fixed header
``sample_id,path,label,detail,country,subject_id`` (UTF-8, LF line endings,
no quoting — fields must not contain commas). Each row describes one labeled
image: bona fide, or one of the three attack species (print, screen,
composite), optionally refined by a free-text ``detail`` sub-type.
"""
from __future__ import annotations

import csv
import enum
import io
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Mapping

MANIFEST_HEADER = ("sample_id", "path", "label", "detail", "country", "subject_id")
BONAFIDE_LABEL = "bonafide"


class ManifestError(ValueError):
    """Malformed manifest content (bad header, row shape, label, duplicate id)."""


class PaisKind(enum.Enum):
    """Attack-instrument species; the only attack groupings used in metrics."""

    PRINT = "print"
    SCREEN = "screen"
    COMPOSITE = "composite"


#: Known sub-type strings and the species they belong under. Unknown details
#: are allowed anywhere; a known detail under the wrong species is a violation.
KNOWN_DETAILS: Mapping[str, PaisKind] = {
    "gray_print": PaisKind.PRINT,
    "colour_print": PaisKind.PRINT,
    "pvc": PaisKind.PRINT,
    "physical_composite": PaisKind.COMPOSITE,
    "digital_composite": PaisKind.COMPOSITE,
}


@dataclass(frozen=True)
class SampleClass:
    """Ground-truth class of a sample: bona fide (``pais is None``) or one attack species."""

    pais: PaisKind | None
    detail: str | None = None

    @property
    def is_bonafide(self) -> bool:
        return self.pais is None

    @property
    def label(self) -> str:
        """CSV label: ``bonafide`` or the species value."""
        return BONAFIDE_LABEL if self.pais is None else self.pais.value

    @classmethod
    def bonafide(cls) -> "SampleClass":
        return cls(pais=None)

    @classmethod
    def attack(cls, pais: PaisKind, detail: str | None = None) -> "SampleClass":
        return cls(pais=pais, detail=detail)

    @classmethod
    def from_label(cls, label: str, detail: str | None = None) -> "SampleClass":
        if label == BONAFIDE_LABEL:
            return cls(pais=None, detail=detail)
        try:
            return cls(pais=PaisKind(label), detail=detail)
        except ValueError:
            raise ManifestError(f"unknown label {label!r}") from None


@dataclass(frozen=True)
class SampleRecord:
    """One labeled dataset entry."""

    sample_id: str
    path: str
    sample_class: SampleClass
    country: str
    subject_id: str
    document_version: str | None = None


@dataclass(frozen=True)
class Manifest:
    """Ordered, immutable collection of sample records."""

    records: tuple[SampleRecord, ...]
    name: str = ""
    root: str = ""

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[SampleRecord]:
        return iter(self.records)


def parse_manifest(text: str, *, name: str = "", root: str = "") -> Manifest:
    """Parse manifest CSV text into a Manifest, preserving row order.

    Raises ManifestError naming the offending line for a bad header, wrong
    column count, unknown label, or duplicate sample_id. ``name`` and ``root``
    are out-of-band (the CSV does not carry them).
    """
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != MANIFEST_HEADER:
        raise ManifestError(
            f"line 1: expected header {','.join(MANIFEST_HEADER)!r}"
        )
    records: list[SampleRecord] = []
    seen: set[str] = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(MANIFEST_HEADER):
            raise ManifestError(f"line {lineno}: expected 6 columns, got {len(row)}")
        sample_id, path, label, detail, country, subject_id = row
        if sample_id in seen:
            raise ManifestError(f"line {lineno}: duplicate sample_id {sample_id!r}")
        seen.add(sample_id)
        try:
            sample_class = SampleClass.from_label(label, detail or None)
        except ManifestError as exc:
            raise ManifestError(f"line {lineno}: {exc}") from None
        records.append(
            SampleRecord(
                sample_id=sample_id,
                path=path,
                sample_class=sample_class,
                country=country,
                subject_id=subject_id,
            )
        )
    return Manifest(records=tuple(records), name=name, root=root)


def serialize_manifest(manifest: Manifest) -> str:
    """Render a Manifest back to CSV text (inverse of parse_manifest)."""
    lines = [",".join(MANIFEST_HEADER)]
    for r in manifest.records:
        fields = (
            r.sample_id,
            r.path,
            r.sample_class.label,
            r.sample_class.detail or "",
            r.country,
            r.subject_id,
        )
        for value in fields:
            if "," in value or "\n" in value or "\r" in value:
                raise ManifestError(
                    f"{r.sample_id!r}: field {value!r} contains a comma or newline"
                )
        lines.append(",".join(fields))
    return "\n".join(lines) + "\n"


@dataclass
class ValidationReport:
    """Counts per class/country/subject plus invariant violations.

    Violations are data, not failures: an empty list means every record
    satisfies the type invariants and at least one bona fide record exists.
    """

    total: int
    by_class: dict[str, int]
    by_detail: dict[str, int]
    by_country: dict[str, int]
    by_class_and_country: dict[str, dict[str, int]]
    unique_subjects: int
    unique_subjects_by_class: dict[str, int]
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "by_class": dict(self.by_class),
            "by_detail": dict(self.by_detail),
            "by_country": dict(self.by_country),
            "by_class_and_country": {
                k: dict(v) for k, v in self.by_class_and_country.items()
            },
            "unique_subjects": self.unique_subjects,
            "unique_subjects_by_class": dict(self.unique_subjects_by_class),
            "violations": list(self.violations),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        lines = [f"records: {self.total}"]
        for label in sorted(self.by_class):
            lines.append(f"  {label}: {self.by_class[label]}")
        if self.by_detail:
            lines.append("sub-types:")
            for detail in sorted(self.by_detail):
                lines.append(f"  {detail}: {self.by_detail[detail]}")
        if self.by_country:
            lines.append("countries:")
            for country in sorted(self.by_country):
                lines.append(f"  {country}: {self.by_country[country]}")
        lines.append(f"unique subjects: {self.unique_subjects}")
        if self.violations:
            lines.append(f"violations ({len(self.violations)}):")
            lines.extend(f"  {v}" for v in self.violations)
        else:
            lines.append("violations: none")
        return "\n".join(lines) + "\n"


def _country_ok(country: str) -> bool:
    return len(country) == 3 and country.isalpha() and country.isupper()


def validate_manifest(manifest: Manifest) -> ValidationReport:
    """Compute per-class/country/subject counts and list invariant violations."""
    by_class: Counter[str] = Counter()
    by_detail: Counter[str] = Counter()
    by_country: Counter[str] = Counter()
    by_class_and_country: dict[str, Counter[str]] = {}
    subjects: set[str] = set()
    subjects_by_class: dict[str, set[str]] = {}
    violations: list[str] = []
    seen_ids: set[str] = set()

    for r in manifest.records:
        cls = r.sample_class
        by_class[cls.label] += 1
        if cls.detail:
            by_detail[cls.detail] += 1
        by_country[r.country] += 1
        by_class_and_country.setdefault(cls.label, Counter())[r.country] += 1
        subjects.add(r.subject_id)
        subjects_by_class.setdefault(cls.label, set()).add(r.subject_id)

        if r.sample_id in seen_ids:
            violations.append(f"{r.sample_id}: duplicate sample_id")
        seen_ids.add(r.sample_id)
        if not r.path:
            violations.append(f"{r.sample_id}: empty path")
        if not _country_ok(r.country):
            violations.append(
                f"{r.sample_id}: country {r.country!r} not 3 uppercase letters"
            )
        expected = KNOWN_DETAILS.get(cls.detail or "")
        if expected is not None and cls.pais is not expected:
            violations.append(
                f"{r.sample_id}: detail {cls.detail!r} inconsistent with class {cls.label!r}"
            )

    if by_class[BONAFIDE_LABEL] == 0:
        violations.append("no bona fide records")

    return ValidationReport(
        total=len(manifest.records),
        by_class=dict(by_class),
        by_detail=dict(by_detail),
        by_country=dict(by_country),
        by_class_and_country={k: dict(v) for k, v in by_class_and_country.items()},
        unique_subjects=len(subjects),
        unique_subjects_by_class={k: len(v) for k, v in subjects_by_class.items()},
        violations=violations,
    )


def filter_manifest(
    manifest: Manifest,
    *,
    country: str | None = None,
    pais: PaisKind | None = None,
) -> Manifest:
    """Subset a manifest, preserving order.

    Filtering by species keeps all bona fide records plus that species'
    attacks (the bona-fide-vs-one-attack convention used for per-species DET
    curves). Filtering by country keeps that country's records, bona fide and
    attacks alike. Both filters may be combined; an empty result is legal.
    """
    kept = tuple(
        r
        for r in manifest.records
        if (country is None or r.country == country)
        and (pais is None or r.sample_class.is_bonafide or r.sample_class.pais is pais)
    )
    return Manifest(records=kept, name=manifest.name, root=manifest.root)
