"""Synthetic desk-scale test assets: marker-labeled pseudo-image corpora and
parametric score sets with analytically known equal error rate.

Generated PNGs are seeded RGB noise with a machine-readable marker strip in
the top-left corner so an oracle scorer can recover the ground-truth class
from pixels alone. The strip is one row of 8 square cells (cell side =
min(width, height) // 16, at least 1 px), each cell all-black (bit 0) or
all-white (bit 1):

    [1, 0, 1, 0,  b1, b0,  parity, 1]

where b1 b0 is the class index (0 bona fide, 1 print, 2 screen,
3 composite), parity is the even parity of the two bits, and the framing
cells guard against accidental decodes. PNG encoding is lossless, so a
decoder reads each cell's center pixel and thresholds it at mid-gray.

Determinism: every image draws from a counter-based generator keyed by
(corpus seed, global sample index), so output bytes are independent of
generation order and platform.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy.stats import norm

from .manifest import (
    BONAFIDE_LABEL,
    Manifest,
    PaisKind,
    SampleClass,
    SampleRecord,
    serialize_manifest,
)
from .metrics import MetricsError, ScorePartition

MARKER_CELLS = 8
_SYNC = (1, 0, 1, 0)

#: Class index carried by the marker strip.
CLASS_INDEX: Mapping[str, int] = {
    BONAFIDE_LABEL: 0,
    PaisKind.PRINT.value: 1,
    PaisKind.SCREEN.value: 2,
    PaisKind.COMPOSITE.value: 3,
}
INDEX_CLASS = {v: k for k, v in CLASS_INDEX.items()}


class CorpusError(ValueError):
    """Invalid corpus or score-distribution specification."""


@dataclass(frozen=True)
class ClassCount:
    """How many samples of one class to generate.

    ``count`` samples are spread round-robin over the spec's country list;
    ``by_country`` pins explicit per-country counts instead.
    """

    label: str
    detail: str | None = None
    count: int = 0
    by_country: Mapping[str, int] | None = None

    def total(self) -> int:
        if self.by_country is not None:
            return sum(self.by_country.values())
        return self.count


@dataclass(frozen=True)
class CorpusSpec:
    """Recipe for one generated corpus."""

    name: str
    classes: tuple[ClassCount, ...]
    countries: tuple[str, ...] = ("CHL", "GTM", "PAN", "MEX")
    subjects: int = 155
    image_size: tuple[int, int] = (384, 384)
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.classes or all(c.total() == 0 for c in self.classes):
            raise CorpusError("at least one class count must be positive")
        if any(c.total() < 0 or c.count < 0 for c in self.classes):
            raise CorpusError("class counts must be >= 0")
        if min(self.image_size) < 16:
            raise CorpusError("image_size must be at least 16x16 for the marker strip")
        if self.subjects < 1:
            raise CorpusError("subjects must be >= 1")
        if not self.countries and any(
            c.by_country is None and c.count > 0 for c in self.classes
        ):
            raise CorpusError("countries list required for round-robin counts")


def track1_spec(
    seed: int = 2025, image_size: tuple[int, int] = (384, 384)
) -> CorpusSpec:
    """The default corpus recipe: 12,000 samples in the Track-1 class mix
    (3,000 bona fide / 3,000 screen / 1,000 gray + 2,000 colour print /
    1,500 physical + 1,500 digital composite) over 155 cycled subjects."""
    return CorpusSpec(
        name="track1-synthetic",
        classes=(
            ClassCount(label=BONAFIDE_LABEL, count=3000),
            ClassCount(label=PaisKind.SCREEN.value, count=3000),
            ClassCount(label=PaisKind.PRINT.value, detail="gray_print", count=1000),
            ClassCount(label=PaisKind.PRINT.value, detail="colour_print", count=2000),
            ClassCount(
                label=PaisKind.COMPOSITE.value, detail="physical_composite", count=1500
            ),
            ClassCount(
                label=PaisKind.COMPOSITE.value, detail="digital_composite", count=1500
            ),
        ),
        seed=seed,
        image_size=image_size,
    )


def spec_from_json(text: str) -> CorpusSpec:
    """Load a CorpusSpec from its JSON form (see spec_to_json)."""
    d = json.loads(text)
    try:
        classes = tuple(
            ClassCount(
                label=c["label"],
                detail=c.get("detail"),
                count=c.get("count", 0),
                by_country=c.get("by_country"),
            )
            for c in d["classes"]
        )
        return CorpusSpec(
            name=d.get("name", "corpus"),
            classes=classes,
            countries=tuple(d.get("countries", ("CHL", "GTM", "PAN", "MEX"))),
            subjects=d.get("subjects", 155),
            image_size=tuple(d.get("image_size", (384, 384))),
            seed=d.get("seed", 0),
        )
    except (KeyError, TypeError) as exc:
        raise CorpusError(f"bad corpus spec: {exc}") from None


def spec_to_json(spec: CorpusSpec) -> str:
    classes = []
    for c in spec.classes:
        entry: dict = {"label": c.label}
        if c.detail:
            entry["detail"] = c.detail
        if c.by_country is not None:
            entry["by_country"] = dict(c.by_country)
        else:
            entry["count"] = c.count
        classes.append(entry)
    d = {
        "name": spec.name,
        "classes": classes,
        "countries": list(spec.countries),
        "subjects": spec.subjects,
        "image_size": list(spec.image_size),
        "seed": spec.seed,
    }
    return json.dumps(d, indent=2) + "\n"


def _cell_side(width: int, height: int) -> int:
    return max(1, min(width, height) // 16)


def _marker_bits(class_index: int) -> tuple[int, ...]:
    b1, b0 = (class_index >> 1) & 1, class_index & 1
    parity = (b1 + b0) % 2
    return _SYNC + (b1, b0, parity, 1)


def _image_rng(seed: int, index: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def render_sample_image(
    size: tuple[int, int], class_index: int, rng: np.random.Generator
) -> Image.Image:
    """Seeded RGB noise with the class marker strip embedded top-left."""
    width, height = size
    pixels = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    c = _cell_side(width, height)
    for i, bit in enumerate(_marker_bits(class_index)):
        pixels[0:c, i * c : (i + 1) * c, :] = 255 if bit else 0
    return Image.fromarray(pixels, mode="RGB")


def decode_class_index(image_bytes: bytes) -> int | None:
    """Recover the class index from encoded image bytes.

    Returns None when the bytes are not a decodable image or the marker
    strip is absent/corrupt (bad framing or parity).
    """
    try:
        with Image.open(io.BytesIO(image_bytes)) as img:
            pixels = np.asarray(img.convert("RGB"))
    except (UnidentifiedImageError, OSError, ValueError):
        return None
    height, width = pixels.shape[:2]
    c = _cell_side(width, height)
    if MARKER_CELLS * c > width or c > height:
        return None
    bits = []
    for i in range(MARKER_CELLS):
        center = pixels[c // 2, i * c + c // 2]
        bits.append(1 if int(center.mean()) > 127 else 0)
    if tuple(bits[:4]) != _SYNC or bits[7] != 1:
        return None
    b1, b0, parity = bits[4], bits[5], bits[6]
    if parity != (b1 + b0) % 2:
        return None
    return (b1 << 1) | b0


def gen_corpus(spec: CorpusSpec, out_dir: str | Path) -> Manifest:
    """Write the corpus images plus ``manifest.csv`` under out_dir.

    Deterministic given the spec: same spec and seed produce byte-identical
    images and manifest. Returns the manifest (root set to out_dir).
    """
    out = Path(out_dir)
    images_dir = out / "images"
    images_dir.mkdir(parents=True, exist_ok=True)

    records: list[SampleRecord] = []
    global_index = 0
    for entry in spec.classes:
        if entry.by_country is not None:
            plan = [
                country
                for country, n in entry.by_country.items()
                for _ in range(n)
            ]
        else:
            plan = [
                spec.countries[i % len(spec.countries)] for i in range(entry.count)
            ]
        class_key = entry.detail or entry.label
        class_index = CLASS_INDEX[entry.label]
        for i, country in enumerate(plan):
            sample_id = f"{class_key}_{i:05d}"
            rel_path = f"images/{sample_id}.png"
            rng = _image_rng(spec.seed, global_index)
            image = render_sample_image(spec.image_size, class_index, rng)
            image.save(out / rel_path, format="PNG")
            records.append(
                SampleRecord(
                    sample_id=sample_id,
                    path=rel_path,
                    sample_class=SampleClass.from_label(entry.label, entry.detail),
                    country=country,
                    subject_id=f"u{(i % spec.subjects) + 1:03d}",
                )
            )
            global_index += 1

    manifest = Manifest(records=tuple(records), name=spec.name, root=str(out))
    (out / "manifest.csv").write_text(serialize_manifest(manifest), encoding="utf-8")
    return manifest


@dataclass(frozen=True)
class ScoreDistSpec:
    """Two clipped-normal score populations with known separation."""

    bonafide: tuple[float, float]  # (mean, stddev)
    attack: tuple[float, float]
    n_bonafide: int
    n_attack: int
    seed: int = 0

    def __post_init__(self) -> None:
        for mean, stddev in (self.bonafide, self.attack):
            if not (0.0 <= mean <= 1.0):
                raise CorpusError(f"mean {mean!r} out of [0, 1]")
            if stddev <= 0.0:
                raise CorpusError("stddev must be > 0")
        if self.n_bonafide < 1 or self.n_attack < 1:
            raise CorpusError("counts must be >= 1")


def gen_scores(spec: ScoreDistSpec) -> ScorePartition:
    """Draw the two populations, clipped to [0, 1]; deterministic given seed.

    Attack draws are split into consecutive chunks over the three species so
    pooled and per-species selectors both work downstream.
    """
    bf_rng = _image_rng(spec.seed, 0)
    atk_rng = _image_rng(spec.seed, 1)
    bf = np.clip(
        bf_rng.normal(spec.bonafide[0], spec.bonafide[1], spec.n_bonafide), 0.0, 1.0
    )
    atk = np.clip(
        atk_rng.normal(spec.attack[0], spec.attack[1], spec.n_attack), 0.0, 1.0
    )
    kinds = list(PaisKind)
    bounds = np.linspace(0, spec.n_attack, len(kinds) + 1).astype(int)
    attacks = {}
    for kind, lo, hi in zip(kinds, bounds, bounds[1:]):
        if hi > lo:
            attacks[kind] = tuple(atk[lo:hi].tolist())
    return ScorePartition(bonafide=tuple(bf.tolist()), attacks=attacks)


def analytic_eer(spec: ScoreDistSpec) -> float:
    """Closed-form EER for two equal-variance normal score populations:
    Phi(-|mean separation| / (2 sigma)), ignoring clipping."""
    sigma_bf, sigma_atk = spec.bonafide[1], spec.attack[1]
    if sigma_bf != sigma_atk:
        raise MetricsError(
            "closed form requires equal stddevs; estimate by simulation instead"
        )
    gap = abs(spec.bonafide[0] - spec.attack[0])
    return float(norm.cdf(-gap / (2.0 * sigma_bf)))
