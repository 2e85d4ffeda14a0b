"""Pipeline configuration: YAML defaults, user overrides and validation."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from .blocking import BlockingKey, expand_templates
from .comparators import ComparatorSpec
from .constraints import RoleProperties, derive_constraint_table
from .fusion import FusionParams
from .graph import generate_linkage_types
from .ingest import COMMON_ATTRIBUTES
from .model import (
    CertificateType,
    LinkageType,
    LinkConstraintTable,
    RolePairSet,
    RoleType,
    RoleVocabulary,
    TemporalConstraintTable,
)
from .pairwise import MISSING_POLICIES, WEIGHTING_MODES
from .relational import METHODS as RELATIONAL_METHODS
from .group import METHODS as GROUP_METHODS
from .synth import PopulationParams
from .validation import ConfigError, check_choice, check_fraction, check_positive_int

TOP_LEVEL_KEYS = {
    "seed", "workers", "data", "roles", "drop_roles", "newborn_roles", "role_properties", "role_pairs",
    "temporal", "link_constraints", "relational_neighbors", "blocking", "comparators", "pairwise",
    "relational", "group", "fusion", "synth",
}


def default_config_text() -> str:
    return resources.files("poplink").joinpath("data", "default_config.yaml").read_text(encoding="utf-8")


def deep_merge(base: Mapping, override: Mapping) -> dict:
    out = copy.deepcopy(dict(base))
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), Mapping):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass
class PipelineConfig:
    raw: dict
    base_dir: Path
    seed: int
    workers: int
    data: dict[str, Path]
    vocabulary: RoleVocabulary
    drop_roles: tuple[str, ...]
    newborn_roles: tuple[str, ...]
    role_properties: dict[str, RoleProperties]
    role_pairs: RolePairSet
    temporal: TemporalConstraintTable
    linkage_types: list[LinkageType]
    link_constraints: LinkConstraintTable
    constraints_enabled: bool
    assignment_mode: str
    blocking_keys: list[BlockingKey]
    census_decade_limit: bool
    max_block_size: int
    comparators: dict[str, ComparatorSpec]
    s_m: float
    missing_values: str
    weighting: str
    train_sample_size: int
    relational_method: str
    group_method: str
    fusion: FusionParams
    synth: Optional[PopulationParams] = None
    role_genders: dict[str, str] = field(default_factory=dict)

    def data_path(self, key: str) -> Path:
        return self.data[key]

    def with_overrides(self, override: Mapping) -> "PipelineConfig":
        return build_config(deep_merge(self.raw, override), self.base_dir)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.raw, sort_keys=True)


def load_config(path: str | Path | None = None, override: Mapping | None = None) -> PipelineConfig:
    """Defaults, then the YAML file at ``path``, then ``override``; validated."""
    raw = yaml.safe_load(default_config_text())
    base_dir = Path.cwd()
    if path is not None:
        path = Path(path)
        try:
            user = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
        if not isinstance(user, Mapping):
            raise ConfigError(f"config {path} must be a mapping at the top level")
        # an explicit null section removes it (used to drop synth params)
        raw = deep_merge(raw, user)
        raw = {k: v for k, v in raw.items() if not (k in user and user[k] is None)}
        base_dir = path.resolve().parent
    if override:
        raw = deep_merge(raw, override)
    return build_config(raw, base_dir)


def _resolve(vocabulary: RoleVocabulary, ref: str) -> RoleType:
    try:
        return vocabulary.resolve(ref)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None


def _role_list(vocabulary: RoleVocabulary, value) -> list[RoleType]:
    refs = value if isinstance(value, list) else [value]
    return [_resolve(vocabulary, r) for r in refs]


def _build_role_pairs(raw: Mapping, vocabulary: RoleVocabulary, props: Mapping[str, RoleProperties]) -> RolePairSet:
    spec = raw.get("role_pairs") or {}
    rule = check_choice("role_pairs.rule", spec.get("rule", "gender_compatible"), ("gender_compatible", "explicit"))
    excluded = set()
    for pair in spec.get("exclude", []) or []:
        a, b = (_resolve(vocabulary, r) for r in pair)
        excluded |= {(a, b), (b, a)}
    pairs = set()
    if rule == "gender_compatible":
        roles = list(vocabulary)
        for a in roles:
            for b in roles:
                ga, gb = props[a.name].gender, props[b.name].gender
                if ga == "any" or gb == "any" or ga == gb:
                    pairs.add((a, b))
    for pair in spec.get("extra", []) or []:
        a, b = (_resolve(vocabulary, r) for r in pair)
        pairs |= {(a, b), (b, a)}
    return RolePairSet(pairs - excluded)


def _build_temporal(raw: Mapping, vocabulary: RoleVocabulary) -> TemporalConstraintTable:
    spec = raw.get("temporal") or {}
    role_windows = {}
    for entry in spec.get("roles", []) or []:
        if len(entry) != 4:
            raise ConfigError(f"temporal entry {entry} must be [from, to, min, max]")
        froms, tos, lo, hi = _role_list(vocabulary, entry[0]), _role_list(vocabulary, entry[1]), entry[2], entry[3]
        if lo > hi:
            raise ConfigError(f"temporal entry {entry} has min > max")
        for a in froms:
            for b in tos:
                role_windows[(a, b)] = (int(lo), int(hi))
    cert_windows = {}
    for entry in spec.get("certificates", []) or []:
        if len(entry) != 4:
            raise ConfigError(f"temporal entry {entry} must be [from, to, min, max]")
        try:
            a, b = CertificateType.parse(entry[0]), CertificateType.parse(entry[1])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if entry[2] > entry[3]:
            raise ConfigError(f"temporal entry {entry} has min > max")
        cert_windows[(a, b)] = (int(entry[2]), int(entry[3]))
    return TemporalConstraintTable(role_windows, cert_windows)


def build_config(raw: Mapping, base_dir: Path | str = ".") -> PipelineConfig:
    raw = dict(raw)
    base_dir = Path(base_dir)
    unknown = set(raw) - TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    for section in ("roles", "role_properties", "blocking", "comparators", "pairwise", "fusion"):
        if not isinstance(raw.get(section), Mapping):
            raise ConfigError(f"config section {section!r} is missing or not a mapping")

    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    workers = check_positive_int("workers", raw.get("workers", 1))

    try:
        roles = {CertificateType.parse(k): list(v) for k, v in raw["roles"].items()}
        vocabulary = RoleVocabulary(roles)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    props: dict[str, RoleProperties] = {}
    for role in vocabulary:
        spec = raw["role_properties"].get(role.name)
        if spec is None:
            raise ConfigError(f"role {role.name!r} has no entry in role_properties")
        try:
            props[role.name] = RoleProperties(**spec)
        except TypeError as exc:
            raise ConfigError(f"role_properties.{role.name}: {exc}") from None
    role_genders = {name: p.gender for name, p in props.items() if p.gender != "any"}

    role_pairs = _build_role_pairs(raw, vocabulary, props)
    temporal = _build_temporal(raw, vocabulary)

    neighbor_spec = {}
    for key, types in (raw.get("relational_neighbors") or {}).items():
        try:
            neighbor_spec[key] = [CertificateType.parse(t) for t in types]
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    linkage_types = generate_linkage_types(vocabulary, role_pairs, neighbor_spec)
    names = {lt.name for lt in linkage_types} | {lt.category for lt in linkage_types}
    stale = set(neighbor_spec) - names
    if stale:
        raise ConfigError(f"relational_neighbors names unknown linkage types: {sorted(stale)}")

    lc = raw.get("link_constraints") or {}
    constraints_enabled = bool(lc.get("enabled", True))
    assignment_mode = check_choice("link_constraints.mode", lc.get("mode", "optimal"), ("greedy", "optimal"))
    try:
        link_constraints = derive_constraint_table(linkage_types, props, lc.get("overrides") or {})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    blocking = raw["blocking"]
    role_sets = {}
    for set_name, refs in (blocking.get("role_sets") or {}).items():
        role_sets[set_name] = _role_list(vocabulary, refs)
    keys = expand_templates(role_sets, blocking.get("templates") or [], blocking.get("phonetic_attributes") or [])
    if not keys:
        raise ConfigError("blocking produces no keys")
    for key in keys:
        key.validate(role_pairs)
        for attribute in key.attributes:
            if attribute not in COMMON_ATTRIBUTES:
                raise ConfigError(f"blocking key {key.key_id} uses unknown attribute {attribute!r}")

    comparators = {}
    for attribute, spec in raw["comparators"].items():
        if attribute not in COMMON_ATTRIBUTES:
            raise ConfigError(f"comparator configured for unknown attribute {attribute!r}")
        spec = dict(spec)
        kind = spec.pop("kind", None)
        comparators[attribute] = ComparatorSpec(kind, spec)

    pw = raw["pairwise"]
    s_m = check_fraction("pairwise.s_m", pw.get("s_m", 0.4))
    missing_values = check_choice("pairwise.missing_values", pw.get("missing_values", "exclude_attribute"), MISSING_POLICIES)
    weighting = check_choice("pairwise.weighting", pw.get("weighting", "uniform"), WEIGHTING_MODES)
    train_sample_size = check_positive_int("pairwise.train_sample_size", pw.get("train_sample_size", 2000))

    relational_method = check_choice("relational.method", (raw.get("relational") or {}).get("method"), RELATIONAL_METHODS)
    group_method = check_choice("group.method", (raw.get("group") or {}).get("method"), GROUP_METHODS)
    fz = raw["fusion"]
    fusion = FusionParams(fz.get("w_R", 0.5), fz.get("w_G", 0.5), fz.get("s_t", 0.3))

    synth = None
    if raw.get("synth"):
        synth = PopulationParams.from_mapping(raw["synth"])

    data = {k: (base_dir / v) for k, v in (raw.get("data") or {}).items() if v}

    return PipelineConfig(
        raw=raw,
        base_dir=base_dir,
        seed=seed,
        workers=workers,
        data=data,
        vocabulary=vocabulary,
        drop_roles=tuple(raw.get("drop_roles") or ()),
        newborn_roles=tuple(raw.get("newborn_roles") or ()),
        role_properties=props,
        role_pairs=role_pairs,
        temporal=temporal,
        linkage_types=linkage_types,
        link_constraints=link_constraints,
        constraints_enabled=constraints_enabled,
        assignment_mode=assignment_mode,
        blocking_keys=keys,
        census_decade_limit=bool(blocking.get("census_decade_limit", False)),
        max_block_size=check_positive_int("blocking.max_block_size", blocking.get("max_block_size", 10_000)),
        comparators=comparators,
        s_m=s_m,
        missing_values=missing_values,
        weighting=weighting,
        train_sample_size=train_sample_size,
        relational_method=relational_method,
        group_method=group_method,
        fusion=fusion,
        synth=synth,
        role_genders=role_genders,
    )
