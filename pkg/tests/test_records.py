import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyreg.records import (
    MalformedDocument,
    ParseFailure,
    Rejected,
    extract_document,
    ExtractionCounters,
    parse_quantity,
    to_canonical,
)
from polyreg.registry import default_registry
from polyreg.units import IncompatibleUnit, units_for_dimension, normalize_unit

REG = default_registry()


# ---- parse_quantity -------------------------------------------------------


def test_parse_point_with_unit():
    q = parse_quantity("105 °C")
    assert q.kind == "point" and q.value == 105.0 and q.unit == "°C"


def test_parse_range_en_dash():
    q = parse_quantity("150–160 MPa")
    assert q.kind == "range" and (q.lo, q.hi) == (150.0, 160.0) and q.unit == "MPa"


def test_parse_range_hyphen_and_to():
    assert parse_quantity("150-160 MPa").kind == "range"
    q = parse_quantity("1.2 to 3.4 GPa")
    assert (q.lo, q.hi) == (1.2, 3.4)


def test_parse_limit():
    q = parse_quantity(">200 MPa")
    assert q.kind == "limit" and q.direction == "greater" and q.bound == 200.0
    q = parse_quantity("≤ 0.5 %")
    assert q.direction == "less" and q.bound == 0.5


def test_parse_tolerance_keeps_value_drops_tolerance():
    q = parse_quantity("105 ± 3 °C")
    assert q.kind == "point" and q.value == 105.0 and q.unit == "°C"


def test_parse_scientific_notation():
    q = parse_quantity("1.3e-4 S/cm")
    assert q.value == pytest.approx(1.3e-4) and q.unit == "S/cm"


def test_parse_bare_number_has_no_unit():
    assert parse_quantity("2.1").unit is None


def test_parse_failures():
    for bad in ("", "no numbers here", "105 200 MPa", "160-150 MPa"):
        with pytest.raises(ParseFailure):
            parse_quantity(bad)


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=60))
def test_parse_quantity_never_panics(text):
    try:
        q = parse_quantity(text)
    except ParseFailure:
        return
    assert q.kind in ("point", "range", "limit")


# ---- to_canonical ---------------------------------------------------------


def test_point_gpa_to_mpa():
    q = parse_quantity("2.4 GPa")
    assert to_canonical(q, REG.by_name("youngs_modulus")) == pytest.approx(2400.0)


def test_range_midpoint_rule():
    q = parse_quantity("150–160 °C")
    assert to_canonical(q, REG.by_name("Tm")) == pytest.approx(155.0)


def test_limit_is_rejected_value():
    q = parse_quantity(">200 MPa")
    assert isinstance(to_canonical(q, REG.by_name("tensile_strength")), Rejected)


def test_kelvin_affine_offset():
    q = parse_quantity("378.15 K")
    assert to_canonical(q, REG.by_name("Tg")) == pytest.approx(105.0)


def test_incompatible_unit_raises():
    q = parse_quantity("100 °C")
    with pytest.raises(IncompatibleUnit):
        to_canonical(q, REG.by_name("youngs_modulus"))


def test_missing_unit_on_dimensional_head_raises():
    q = parse_quantity("105")
    with pytest.raises(IncompatibleUnit):
        to_canonical(q, REG.by_name("Tg"))


def test_dimensionless_head_accepts_bare_number():
    q = parse_quantity("2.3")
    assert to_canonical(q, REG.by_name("dispersity")) == pytest.approx(2.3)


def test_unit_consistency_across_registered_units():
    # converting x in u must agree with converting the u'-expressed value in u'
    rng = np.random.default_rng(5)
    for spec in REG:
        dim = normalize_unit(spec.canonical_unit).dimension
        units = units_for_dimension(dim)
        for _ in range(5):
            canonical = rng.uniform(0.5, 500.0)
            values = []
            for unit in units:
                from polyreg.records import Quantity

                q = Quantity(kind="point", value=unit.from_canonical(canonical), unit=unit.symbol)
                values.append(to_canonical(q, spec))
            for v in values:
                assert math.isclose(v, canonical, rel_tol=1e-12)


# ---- extract_document -----------------------------------------------------


def test_single_sample_single_record():
    doc = "== SAMPLE s1 ==\nSample: PLA film.\nTg = 105 °C.\n"
    samples = extract_document(doc)
    assert len(samples) == 1
    obs = samples[0].observations
    assert len(obs) == 1
    assert obs[0].head_id == REG.by_name("Tg").head_id
    assert obs[0].canonical_value == pytest.approx(105.0)


def test_two_samples_get_distinct_ids():
    doc = (
        "== SAMPLE a ==\nSample: one.\nTg = 100 °C\n"
        "== SAMPLE b ==\nSample: two.\nTm = 170 °C\n"
    )
    samples = extract_document(doc)
    assert [s.sample_id for s in samples] == ["a", "b"]
    assert all(len(s.observations) == 1 for s in samples)
    assert samples[0].observations[0].sample_id == "a"
    assert samples[1].observations[0].sample_id == "b"


def test_unmapped_property_dropped_and_counted():
    doc = "== SAMPLE s1 ==\nSample: resin.\nhardness = 80 Shore D\n"
    counters = ExtractionCounters()
    samples = extract_document(doc, counters=counters)
    assert samples[0].observations == []
    assert counters.unmapped == 1


def test_sample_and_synthesis_blocks_collected():
    doc = (
        "== SAMPLE s1 ==\n"
        "Sample: epoxy blend.\n"
        "Synthesis: cured 2 h at 80 °C.\n"
        "tensile strength = 55 MPa\n"
    )
    s = extract_document(doc)[0]
    assert s.sample_text == "epoxy blend."
    assert s.synthesis_text == "cured 2 h at 80 °C."
    assert len(s.observations) == 1


def test_malformed_delimiter_raises():
    with pytest.raises(MalformedDocument):
        extract_document("== SAMPLE ==\nTg = 100 °C\n")
    with pytest.raises(MalformedDocument):
        extract_document("Sample: no markers at all.\n")
    with pytest.raises(MalformedDocument):
        extract_document("== SAMPLE a ==\nx\n== SAMPLE a ==\ny\n")


def test_limit_observation_has_no_canonical_value():
    doc = "== SAMPLE s1 ==\ntensile strength = >200 MPa\n"
    obs = extract_document(doc)[0].observations
    assert len(obs) == 1
    assert obs[0].quantity.kind == "limit"
    assert obs[0].canonical_value is None
