import pytest
import yaml

from poplink.config import build_config, deep_merge, default_config_text, load_config
from poplink.model import Cardinality
from poplink.validation import ConfigError


def test_defaults(config):
    assert config.seed == 42 and config.workers == 1
    assert config.s_m == pytest.approx(0.4)
    assert (config.fusion.w_R, config.fusion.w_G, config.fusion.s_t) == (0.5, 0.5, 0.3)
    assert config.missing_values == "exclude_attribute" and config.weighting == "uniform"
    assert config.constraints_enabled and config.assignment_mode == "optimal"
    assert config.synth is not None
    assert {"birth", "death", "marriage", "census", "gold"} <= set(config.data)


def test_no_same_type_birth_or_death_links(config):
    cats = {lt.category for lt in config.linkage_types}
    assert "Birth-Birth" not in cats and "Death-Death" not in cats
    assert {"Birth-Death", "Birth-Marriage", "Census-Census", "Marriage-Marriage"} <= cats


def test_deep_merge_keeps_siblings():
    merged = deep_merge({"a": {"x": 1, "y": 2}, "b": 3}, {"a": {"y": 5}})
    assert merged == {"a": {"x": 1, "y": 5}, "b": 3}


def test_yaml_file_overrides_and_null_removes(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("pairwise:\n  s_m: 0.6\nsynth: null\ndata:\n  birth: b.csv\n")
    cfg = load_config(path)
    assert cfg.s_m == pytest.approx(0.6) and cfg.missing_values == "exclude_attribute"
    assert cfg.synth is None and "synth" not in cfg.raw
    assert cfg.data["birth"] == tmp_path.resolve() / "b.csv"


def test_with_overrides_rebuilds(config):
    off = config.with_overrides({"link_constraints": {"enabled": False}, "group": {"method": "maximum"}})
    assert not off.constraints_enabled and off.group_method == "maximum"
    assert config.constraints_enabled


def test_cardinality_override_by_category(config):
    cfg = config.with_overrides({"link_constraints": {"overrides": {"Birth-Marriage": "ManyToMany"}}})
    assert cfg.link_constraints.get("Birth.Baby>Marriage.Bride").cardinality is Cardinality.MANY_TO_MANY


def test_round_trip_through_yaml(config):
    again = build_config(yaml.safe_load(config.to_yaml()), config.base_dir)
    assert [lt.name for lt in again.linkage_types] == [lt.name for lt in config.linkage_types]


@pytest.mark.parametrize("override", [
    {"planets": {}},
    {"seed": "x"},
    {"workers": 0},
    {"pairwise": {"s_m": 1.5}},
    {"pairwise": {"missing_values": "guess"}},
    {"pairwise": {"weighting": "magic"}},
    {"relational": {"method": "cosine"}},
    {"group": {"method": "median"}},
    {"fusion": {"w_R": 0.7, "w_G": 0.7}},
    {"link_constraints": {"mode": "random"}},
    {"comparators": {"shoe_size": {"kind": "exact"}}},
    {"relational_neighbors": {"Nope-Nope": ["Birth"]}},
    {"roles": {"Birth": ["Baby", "Mother", "Father", "Midwife"]}},
    {"synth": {"birth_rate": 3.0}},
])
def test_invalid_values_raise_config_error(override):
    raw = deep_merge(yaml.safe_load(default_config_text()), override)
    with pytest.raises(ConfigError):
        build_config(raw)


def test_unreadable_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("a: [1, 2\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    listy = tmp_path / "list.yaml"
    listy.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(listy)
