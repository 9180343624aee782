import pytest

from polyreg.registry import GROUPS, N_HEADS, default_registry

REG = default_registry()

EXPECTED_LOG_HEADS = {
    "tensile_strength",
    "youngs_modulus",
    "flexural_strength",
    "compressive_strength",
    "yield_strength",
    "flexural_modulus",
    "electrical_conductivity",
    "dielectric_constant",
    "thermal_conductivity",
    "Mn",
    "Mw",
    "viscosity",
}


def test_registry_has_22_heads_with_permutation_ids():
    assert len(REG) == N_HEADS
    assert sorted(s.head_id for s in REG) == list(range(N_HEADS))


def test_group_counts():
    counts = {g: 0 for g in GROUPS}
    for spec in REG:
        counts[spec.group] += 1
    assert counts == {
        "thermal": 5,
        "mechanical": 8,
        "electrical_transport": 3,
        "physicochemical": 6,
    }


def test_alias_sets_pairwise_disjoint():
    seen = {}
    for spec in REG:
        for alias in spec.aliases:
            assert alias not in seen, f"alias {alias!r} shared by {seen.get(alias)} and {spec.name}"
            seen[alias] = spec.name


def test_lookup_examples():
    assert REG.lookup("glass transition temperature").name == "Tg"
    assert REG.lookup("tensile strength").name == "tensile_strength"
    assert REG.lookup("shoe size") is None


def test_lookup_folds_case_and_whitespace():
    assert REG.lookup("  Glass   Transition  TEMPERATURE ").name == "Tg"


def test_lookup_empty_alias_rejected():
    with pytest.raises(ValueError):
        REG.lookup("   ")


def test_canonical_name_round_trip():
    for spec in REG:
        assert REG.lookup(spec.name) is spec


def test_log_space_partition():
    log_names = {s.name for s in REG if s.log_space}
    assert log_names == EXPECTED_LOG_HEADS
    assert len(log_names) == 12
    assert sum(not s.log_space for s in REG) == 10


def test_is_log_space_examples():
    assert REG.is_log_space(REG.by_name("youngs_modulus").head_id)
    assert not REG.is_log_space(REG.by_name("Tg").head_id)
    assert not REG.is_log_space(REG.by_name("density").head_id)


def test_is_log_space_unknown_head():
    with pytest.raises(KeyError):
        REG.is_log_space(99)
