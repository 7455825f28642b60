"""Manifest parsing, validation, and filtering."""
from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from padeval.manifest import (
    Manifest,
    ManifestError,
    PaisKind,
    SampleClass,
    SampleRecord,
    filter_manifest,
    parse_manifest,
    serialize_manifest,
    validate_manifest,
)

HEADER = "sample_id,path,label,detail,country,subject_id"


def _mk(sid, label, detail=None, country="CHL", subject="u1", path=None):
    return SampleRecord(
        sample_id=sid,
        path=path if path is not None else f"images/{sid}.png",
        sample_class=SampleClass.from_label(label, detail),
        country=country,
        subject_id=subject,
    )


class TestParse:
    def test_single_bonafide_row(self):
        text = HEADER + "\ns1,a.png,bonafide,,CHL,u1\n"
        m = parse_manifest(text)
        assert len(m) == 1
        r = m.records[0]
        assert r.sample_class.is_bonafide
        assert r.country == "CHL"
        assert r.sample_class.detail is None

    def test_order_preserved(self):
        text = HEADER + "\nb,b.png,print,gray_print,GTM,u2\na,a.png,bonafide,,CHL,u1\n"
        m = parse_manifest(text)
        assert [r.sample_id for r in m.records] == ["b", "a"]

    def test_duplicate_sample_id(self):
        text = HEADER + "\ns1,a.png,bonafide,,CHL,u1\ns1,b.png,screen,,CHL,u2\n"
        with pytest.raises(ManifestError, match="line 3.*duplicate.*s1"):
            parse_manifest(text)

    def test_unknown_label(self):
        text = HEADER + "\ns1,a.png,hologram,,CHL,u1\n"
        with pytest.raises(ManifestError, match="line 2.*unknown label"):
            parse_manifest(text)

    def test_wrong_column_count(self):
        text = HEADER + "\ns1,a.png,bonafide,,CHL\n"
        with pytest.raises(ManifestError, match="line 2.*columns"):
            parse_manifest(text)

    def test_bad_header(self):
        with pytest.raises(ManifestError, match="line 1"):
            parse_manifest("id,path\ns1,a.png\n")


class TestValidate:
    def test_empty_manifest(self):
        report = validate_manifest(Manifest(records=()))
        assert report.total == 0
        assert report.unique_subjects == 0
        assert "no bona fide records" in report.violations

    def test_lowercase_country(self):
        m = Manifest(records=(_mk("s1", "bonafide"), _mk("s2", "screen", country="cl")))
        report = validate_manifest(m)
        assert any("s2" in v and "3 uppercase letters" in v for v in report.violations)

    def test_counts(self):
        m = Manifest(
            records=(
                _mk("s1", "bonafide"),
                _mk("s2", "bonafide", country="GTM", subject="u2"),
                _mk("s3", "print", detail="gray_print"),
                _mk("s4", "screen"),
            )
        )
        report = validate_manifest(m)
        assert report.ok
        assert report.by_class == {"bonafide": 2, "print": 1, "screen": 1}
        assert report.by_detail == {"gray_print": 1}
        assert report.by_country == {"CHL": 3, "GTM": 1}
        assert report.unique_subjects == 2

    def test_counts_sum_to_total(self):
        m = Manifest(
            records=tuple(
                _mk(f"s{i}", label)
                for i, label in enumerate(
                    ["bonafide", "print", "screen", "composite", "screen"]
                )
            )
        )
        report = validate_manifest(m)
        assert sum(report.by_class.values()) == report.total == len(m)
        attacks = sum(v for k, v in report.by_class.items() if k != "bonafide")
        assert attacks == 4

    def test_inconsistent_detail(self):
        m = Manifest(records=(_mk("s1", "bonafide"), _mk("s2", "screen", detail="gray_print")))
        report = validate_manifest(m)
        assert any("s2" in v and "inconsistent" in v for v in report.violations)

    def test_empty_path(self):
        m = Manifest(records=(_mk("s1", "bonafide", path=""),))
        report = validate_manifest(m)
        assert any("empty path" in v for v in report.violations)

    def test_duplicate_id_reported_as_violation(self):
        m = Manifest(records=(_mk("s1", "bonafide"), _mk("s1", "screen")))
        report = validate_manifest(m)
        assert any("duplicate" in v for v in report.violations)

    def test_text_and_json_rendering(self):
        m = Manifest(records=(_mk("s1", "bonafide"),))
        report = validate_manifest(m)
        assert "records: 1" in report.to_text()
        assert '"total": 1' in report.to_json()


class TestFilter:
    @pytest.fixture
    def mixed(self):
        return Manifest(
            records=(
                _mk("b1", "bonafide", country="CHL"),
                _mk("b2", "bonafide", country="PAN"),
                _mk("a1", "screen", country="CHL"),
                _mk("a2", "print", detail="pvc", country="PAN"),
            )
        )

    def test_by_pais_keeps_all_bonafide(self, mixed):
        out = filter_manifest(mixed, pais=PaisKind.SCREEN)
        assert [r.sample_id for r in out.records] == ["b1", "b2", "a1"]

    def test_by_country(self, mixed):
        out = filter_manifest(mixed, country="PAN")
        assert [r.sample_id for r in out.records] == ["b2", "a2"]

    def test_filters_commute(self, mixed):
        one = filter_manifest(filter_manifest(mixed, pais=PaisKind.PRINT), country="PAN")
        two = filter_manifest(filter_manifest(mixed, country="PAN"), pais=PaisKind.PRINT)
        assert one == two

    def test_empty_result_is_legal(self, mixed):
        out = filter_manifest(mixed, country="MEX")
        assert len(out) == 0


# Round-trip property: any CSV-representable manifest survives
# serialize -> parse unchanged.
_field = st.text(
    alphabet=st.characters(whitelist_categories=("Lu", "Ll", "Nd"), whitelist_characters="_-."),
    min_size=1,
    max_size=12,
)
_labels = st.sampled_from(["bonafide", "print", "screen", "composite"])
_details = st.one_of(st.none(), st.sampled_from(["gray_print", "colour_print", "pvc"]))


@st.composite
def manifests(draw):
    n = draw(st.integers(min_value=0, max_value=12))
    ids = draw(
        st.lists(_field, min_size=n, max_size=n, unique=True)
    )
    records = tuple(
        SampleRecord(
            sample_id=sid,
            path=draw(_field),
            sample_class=SampleClass.from_label(draw(_labels), draw(_details)),
            country=draw(st.sampled_from(["CHL", "GTM", "PAN", "MEX", "ESP"])),
            subject_id=draw(_field),
        )
        for sid in ids
    )
    return Manifest(records=records, name=draw(_field), root="")


@given(manifests())
def test_roundtrip(m):
    assert parse_manifest(serialize_manifest(m), name=m.name, root=m.root) == m


@given(manifests())
def test_pais_and_country_filters_commute(m):
    for pais in PaisKind:
        for country in ("CHL", "ESP"):
            one = filter_manifest(filter_manifest(m, pais=pais), country=country)
            two = filter_manifest(filter_manifest(m, country=country), pais=pais)
            assert one == two


@given(manifests())
def test_validation_counts_sum(m):
    report = validate_manifest(m)
    assert sum(report.by_class.values()) == report.total
    attack_total = sum(v for k, v in report.by_class.items() if k != "bonafide")
    assert attack_total == report.total - report.by_class.get("bonafide", 0)


def test_serialize_rejects_commas():
    m = Manifest(records=(_mk("s,1", "bonafide"),))
    with pytest.raises(ManifestError, match="comma"):
        serialize_manifest(m)


def test_print_filter_on_full_shape_manifest():
    """Species filter keeps all bona fide plus that species: on the standard
    class mix (3,000 bona fide, 1,000+2,000 print) that is 6,000 records."""
    counts = [
        ("bonafide", None, 3000),
        ("screen", None, 3000),
        ("print", "gray_print", 1000),
        ("print", "colour_print", 2000),
        ("composite", "physical_composite", 1500),
        ("composite", "digital_composite", 1500),
    ]
    records = []
    for label, detail, n in counts:
        for i in range(n):
            records.append(_mk(f"{detail or label}_{i}", label, detail=detail))
    m = Manifest(records=tuple(records))
    assert len(filter_manifest(m, pais=PaisKind.PRINT)) == 6000
    assert len(filter_manifest(m, pais=PaisKind.SCREEN)) == 6000
    assert len(filter_manifest(m, pais=PaisKind.COMPOSITE)) == 6000
