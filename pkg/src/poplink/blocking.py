"""Role-typed phonetic blocking and filtered candidate pair generation."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

from . import parallel
from .ingest import RecordStore
from .model import (
    CertificateType,
    RolePairSet,
    RoleType,
    TemporalConstraintTable,
    certificate_temporal_check,
    is_valid_role_pair,
    temporal_check,
)
from .phonetics import ENCODINGS, encode
from .validation import ConfigError

log = logging.getLogger(__name__)

_SHORT = {
    "none": "raw",
    "soundex": "sdx",
    "double_metaphone_primary": "dmp",
    "double_metaphone_alternate": "dma",
}


@dataclass(frozen=True)
class BlockingKey:
    key_id: str
    role_set: frozenset
    attributes: tuple[str, ...] = ()
    encodings: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "role_set", frozenset(self.role_set))
        object.__setattr__(self, "attributes", tuple(self.attributes))
        encodings = tuple(self.encodings) or ("none",) * len(self.attributes)
        object.__setattr__(self, "encodings", encodings)
        if not self.role_set:
            raise ConfigError(f"blocking key {self.key_id} has an empty role set")
        if len(self.encodings) != len(self.attributes):
            raise ConfigError(f"blocking key {self.key_id}: one encoding per attribute required")
        for enc in self.encodings:
            if enc not in ENCODINGS:
                raise ConfigError(f"blocking key {self.key_id}: unknown encoding {enc!r}")

    def validate(self, pairs: RolePairSet) -> None:
        """Reject role sets that would co-block roles one person cannot hold together."""
        for a, b in itertools.combinations(sorted(self.role_set), 2):
            if not is_valid_role_pair(a, b, pairs):
                raise ConfigError(f"blocking key {self.key_id} mixes incompatible roles {a.name} and {b.name}")

    def value(self, record) -> Optional[str]:
        parts = []
        for attribute, encoding in zip(self.attributes, self.encodings):
            raw = record.get(attribute)
            if raw is None:
                return None
            code = encode(raw, encoding)
            if not code:
                return None
            parts.append(code)
        return "|".join(parts)


def expand_templates(
    role_sets: Mapping[str, Sequence[RoleType]],
    templates: Iterable[Mapping],
    phonetic_attributes: Iterable[str],
) -> list[BlockingKey]:
    """Cross role sets, attribute combinations and encodings into concrete keys.

    The template encoding applies to attributes in ``phonetic_attributes``;
    other attributes (years, gender) are keyed on their raw value.
    """
    phonetic = set(phonetic_attributes)
    keys: dict[str, BlockingKey] = {}
    for template in templates:
        for set_name in template["role_sets"]:
            if set_name not in role_sets:
                raise ConfigError(f"blocking template refers to unknown role set {set_name!r}")
            for attributes in template["attributes"]:
                for encoding in template.get("encodings", ["none"]):
                    encs = tuple(encoding if a in phonetic else "none" for a in attributes)
                    key_id = f"{set_name}:{'+'.join(attributes)}:{_SHORT.get(encoding, encoding)}"
                    keys[key_id] = BlockingKey(key_id, frozenset(role_sets[set_name]), tuple(attributes), encs)
    return list(keys.values())


def build_blocks(store: RecordStore, keys: Sequence[BlockingKey]) -> dict[tuple[str, str], list[str]]:
    blocks: dict[tuple[str, str], list[str]] = {}
    for key in keys:
        for role in sorted(key.role_set):
            for record_id in store.by_role.get(role, ()):
                value = key.value(store.records[record_id])
                if value is not None:
                    blocks.setdefault((key.key_id, value), []).append(record_id)
    for members in blocks.values():
        members.sort()
    return blocks


class CandidatePair(NamedTuple):
    # a plain tuple keeps large candidate lists out of the garbage collector's way
    record_id_1: str
    record_id_2: str
    key_ids: tuple[str, ...] = ()


class PairFilter:
    """Role-pair and temporal admissibility of a record pair."""

    def __init__(
        self,
        store: RecordStore,
        role_pairs: RolePairSet,
        temporal: TemporalConstraintTable,
        census_decade_limit: bool = False,
    ):
        # records are reduced to small integer signatures so the hot path hashes ints only
        self._signatures: list[tuple] = []
        self._role_of: list[int] = []
        index: dict[tuple, int] = {}
        roles: dict[RoleType, int] = {}
        self.info: dict[str, tuple[str, int]] = {}
        for rid, r in store.records.items():
            cert = store.certificates[r.certificate_id]
            sig = (r.role, cert.cert_type, cert.event_year)
            if sig not in index:
                index[sig] = len(self._signatures)
                self._signatures.append(sig)
                self._role_of.append(roles.setdefault(r.role, len(roles)))
            self.info[rid] = (r.certificate_id, index[sig])
        self.role_pairs = role_pairs
        self.temporal = temporal
        self.census_decade_limit = census_decade_limit
        self._verdicts: dict[tuple[int, int], bool] = {}
        self._role_ok: dict[tuple[int, int], bool] = {}

    def __call__(self, id1: str, id2: str) -> bool:
        cert1, sig1 = self.info[id1]
        cert2, sig2 = self.info[id2]
        if cert1 == cert2:
            return False
        ok = self._verdicts.get((sig1, sig2))
        if ok is None:
            roles = (self._role_of[sig1], self._role_of[sig2])
            role_ok = self._role_ok.get(roles)
            if role_ok is None:
                role1, role2 = self._signatures[sig1][0], self._signatures[sig2][0]
                role_ok = self._role_ok[roles] = is_valid_role_pair(role1, role2, self.role_pairs)
            ok = role_ok and self._windows_ok(*self._signatures[sig1], *self._signatures[sig2])
            self._verdicts[(sig1, sig2)] = ok
        return ok

    def _windows_ok(self, role1, type1, year1, role2, type2, year2) -> bool:
        if not temporal_check(role1, year1, role2, year2, self.temporal):
            return False
        if not certificate_temporal_check(type1, year1, type2, year2, self.temporal):
            return False
        if self.census_decade_limit and CertificateType.CENSUS in (type1, type2) and abs(year1 - year2) > 10:
            return False
        return True


def _emit_chunk(items):
    accept = parallel.shared("filter")
    found: dict[tuple[str, str], tuple[str, ...]] = {}
    for key_id, members in items:
        for i, id1 in enumerate(members):
            for id2 in members[i + 1:]:
                pair = (id1, id2)
                keys = found.get(pair)
                if keys is not None:
                    if key_id not in keys:
                        found[pair] = keys + (key_id,)
                elif accept(id1, id2):
                    found[pair] = (key_id,)
    return found


def emit_candidates(
    blocks: Mapping[tuple[str, str], list[str]],
    store: RecordStore,
    role_pairs: RolePairSet,
    temporal: TemporalConstraintTable,
    *,
    census_decade_limit: bool = False,
    max_block_size: int = 10_000,
    workers: int = 1,
) -> list[CandidatePair]:
    """Distinct admissible within-block pairs, sorted by record ids."""
    items = []
    for (key_id, value), members in sorted(blocks.items()):
        if len(members) < 2:
            continue
        if len(members) > max_block_size:
            log.warning("block %s=%r holds %d records (cap %d)", key_id, value, len(members), max_block_size)
        items.append((key_id, members))
    state = {"filter": PairFilter(store, role_pairs, temporal, census_decade_limit)}
    merged: dict[tuple[str, str], tuple[str, ...]] = {}
    for part in parallel.map_chunks(_emit_chunk, items, workers=workers, state=state):
        for pair, keys in part.items():
            merged[pair] = merged.get(pair, ()) + keys
    return [CandidatePair(a, b, tuple(sorted(set(merged[(a, b)])))) for a, b in sorted(merged)]


def write_candidates(candidates: Iterable[CandidatePair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("record_id_1\trecord_id_2\tkeys\n")
        for c in candidates:
            handle.write(f"{c.record_id_1}\t{c.record_id_2}\t{','.join(c.key_ids)}\n")
