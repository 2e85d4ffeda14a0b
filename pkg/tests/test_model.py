import pytest

from poplink.model import (
    Cardinality,
    Certificate,
    CertificateType,
    IndividualRecord,
    LifeSegment,
    RolePairSet,
    RoleVocabulary,
    TemporalConstraintTable,
    is_valid_role_pair,
    make_life_segment,
    order_by_event_year,
    temporal_check,
    certificate_temporal_check,
)

from conftest import B, C, D, M


def test_role_pairs_from_default_config(config, vocab):
    baby, bride = vocab.resolve("Baby"), vocab.resolve("Bride")
    groom, mother = vocab.resolve("Groom"), vocab.resolve("Mother")
    assert is_valid_role_pair(baby, bride, config.role_pairs)
    assert not is_valid_role_pair(groom, mother, config.role_pairs)
    assert not is_valid_role_pair(groom, vocab.resolve("Bride"), config.role_pairs)
    assert not is_valid_role_pair(baby, baby, config.role_pairs)


def test_role_pair_lookup_is_orientation_free(vocab):
    a, b = vocab.resolve("Baby"), vocab.resolve("Deceased")
    pairs = RolePairSet([(a, b)])
    assert (a, b) in pairs and (b, a) in pairs


def test_temporal_windows(config, vocab):
    baby, dec = vocab.resolve("Baby"), vocab.resolve("Deceased")
    bride, bmother = vocab.resolve("Bride"), vocab.resolve("BrideMother")
    # an infant death recorded a year before the birth registration still passes
    assert temporal_check(baby, 1870, dec, 1869, config.temporal)
    assert not temporal_check(bride, 1865, bmother, 1870, config.temporal)
    # argument order does not matter
    assert temporal_check(dec, 1869, baby, 1870, config.temporal)
    assert not temporal_check(dec, 1860, baby, 1870, config.temporal)


def test_unlisted_pairs_are_unconstrained(vocab):
    table = TemporalConstraintTable()
    assert temporal_check(vocab.resolve("Baby"), 1900, vocab.resolve("Groom"), 1800, table)


def test_same_type_window_uses_absolute_difference(config):
    assert not certificate_temporal_check(C, 1871, C, 1871, config.temporal)
    assert certificate_temporal_check(C, 1881, C, 1871, config.temporal)


def test_inverted_window_rejected(vocab):
    with pytest.raises(ValueError):
        TemporalConstraintTable({(vocab.resolve("Baby"), vocab.resolve("Bride")): (5, 1)})


def test_order_ties_broken_by_certificate_id(vocab):
    role = vocab.resolve("Head")
    recs = [(IndividualRecord(f"{c}-1", c, role), 1871) for c in ("C3", "C1", "C2")]
    ordered = order_by_event_year(recs + [(IndividualRecord("C0-1", "C0", role), 1881)])
    assert [r.certificate_id for r, _ in ordered] == ["C1", "C2", "C3", "C0"]


def test_certificate_invariants(vocab):
    baby = vocab.resolve("Baby")
    with pytest.raises(ValueError):
        Certificate("B1", B, 1870, ())
    with pytest.raises(ValueError):
        Certificate("B1", B, 1870, (IndividualRecord("r", "B1", baby), IndividualRecord("r", "B1", baby)))
    with pytest.raises(ValueError):
        Certificate("B1", D, 1870, (IndividualRecord("r", "B1", baby),))
    with pytest.raises(ValueError):
        Certificate("B1", B, 1870, (IndividualRecord("r", "B2", baby),))


def test_records_are_immutable(vocab):
    r = IndividualRecord("r", "B1", vocab.resolve("Baby"), {"first_name": "ann"})
    with pytest.raises(TypeError):
        r.attributes["first_name"] = "x"


def test_vocabulary_resolution(vocab):
    assert vocab.resolve("Birth.Baby") == vocab.resolve("Baby")
    with pytest.raises(KeyError):
        vocab.resolve("Pope")
    dup = RoleVocabulary({B: ["Mother"], D: ["Mother"]})
    with pytest.raises(KeyError, match="ambiguous"):
        dup.resolve("Mother")
    with pytest.raises(ValueError):
        RoleVocabulary({B: ["Baby", "Baby"]})


def test_life_segment_checks(config, vocab):
    baby = IndividualRecord("B1-1", "B1", vocab.resolve("Baby"))
    child = IndividualRecord("C1-1", "C1", vocab.resolve("Child"))
    dec = IndividualRecord("D1-1", "D1", vocab.resolve("Deceased"))
    seg = make_life_segment([(dec, 1875), (baby, 1860), (child, 1861)], config.role_pairs, config.temporal)
    assert seg.record_ids == ["B1-1", "C1-1", "D1-1"]
    with pytest.raises(ValueError):
        make_life_segment([(baby, 1860), (dec, 1850)], config.role_pairs, config.temporal)
    groom = IndividualRecord("M1-1", "M1", vocab.resolve("Groom"))
    mother = IndividualRecord("B2-2", "B2", vocab.resolve("Mother"))
    assert LifeSegment(((groom, 1860), (mother, 1861))).violations(config.role_pairs)
    twin = IndividualRecord("B1-2", "B1", vocab.resolve("Mother"))
    assert "two records from one certificate" in LifeSegment(((baby, 1860), (twin, 1860))).violations(config.role_pairs)


def test_cardinality_aliases():
    assert Cardinality.parse("1-to-m") is Cardinality.ONE_TO_MANY
    assert Cardinality.parse("ManyToMany") is Cardinality.MANY_TO_MANY
    with pytest.raises(ValueError):
        Cardinality.parse("2-to-2")


def test_certificate_type_parse():
    assert CertificateType.parse(" census ") is C
    assert [t.order for t in (B, C, D, M)] == [0, 1, 2, 3]
    with pytest.raises(ValueError):
        CertificateType.parse("Baptism")
