"""Domain types shared by every pipeline stage.

Certificates, individual records, role vocabularies and the validity
predicates (role pairs, temporal windows, event-year ordering) live here.
All types are immutable once built.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Optional, Sequence


class CertificateType(str, enum.Enum):
    BIRTH = "Birth"
    DEATH = "Death"
    MARRIAGE = "Marriage"
    CENSUS = "Census"

    @classmethod
    def parse(cls, value: str) -> "CertificateType":
        for member in cls:
            if value.strip().lower() == member.value.lower():
                return member
        raise ValueError(f"unknown certificate type {value!r}")

    @property
    def order(self) -> int:
        # alphabetical, which is also the order of the evaluation categories
        return _CERT_ORDER[self]


_CERT_ORDER = {
    CertificateType.BIRTH: 0,
    CertificateType.CENSUS: 1,
    CertificateType.DEATH: 2,
    CertificateType.MARRIAGE: 3,
}


@dataclass(frozen=True, order=True)
class RoleType:
    name: str
    cert_type: CertificateType

    def __str__(self) -> str:
        return self.name


class RoleVocabulary:
    """The configured set of role types, grouped by certificate type."""

    def __init__(self, roles: Mapping[CertificateType, Sequence[str]]):
        by_type: dict[CertificateType, dict[str, RoleType]] = {}
        for cert_type, names in roles.items():
            table = by_type.setdefault(cert_type, {})
            for name in names:
                if name in table:
                    raise ValueError(f"duplicate role {name!r} in {cert_type.value}")
                table[name] = RoleType(name, cert_type)
        self._by_type = by_type

    def __iter__(self):
        for cert_type in sorted(self._by_type, key=lambda t: t.order):
            yield from self._by_type[cert_type].values()

    def __len__(self) -> int:
        return sum(len(t) for t in self._by_type.values())

    def __contains__(self, role: object) -> bool:
        return isinstance(role, RoleType) and self._by_type.get(role.cert_type, {}).get(role.name) == role

    def get(self, cert_type: CertificateType, name: str) -> Optional[RoleType]:
        return self._by_type.get(cert_type, {}).get(name)

    def roles_of(self, cert_type: CertificateType) -> list[RoleType]:
        return list(self._by_type.get(cert_type, {}).values())

    def resolve(self, ref: str) -> RoleType:
        """Look up ``"Name"`` or ``"CertType.Name"``; bare names must be unambiguous."""
        if "." in ref:
            type_part, name = ref.split(".", 1)
            role = self.get(CertificateType.parse(type_part), name)
            if role is None:
                raise KeyError(f"unknown role {ref!r}")
            return role
        hits = [t[ref] for t in self._by_type.values() if ref in t]
        if not hits:
            raise KeyError(f"unknown role {ref!r}")
        if len(hits) > 1:
            raise KeyError(f"role {ref!r} is ambiguous; qualify it as CertType.{ref}")
        return hits[0]


class RolePairSet:
    """Whitelist of role combinations one person may hold across two certificates."""

    def __init__(self, pairs: Iterable[tuple[RoleType, RoleType]] = ()):
        self.pairs = frozenset(pairs)

    def __contains__(self, pair: tuple[RoleType, RoleType]) -> bool:
        return is_valid_role_pair(pair[0], pair[1], self)

    def __len__(self) -> int:
        return len(self.pairs)


def is_valid_role_pair(a: RoleType, b: RoleType, pairs: RolePairSet) -> bool:
    return (a, b) in pairs.pairs or (b, a) in pairs.pairs


@dataclass(frozen=True)
class IndividualRecord:
    record_id: str
    certificate_id: str
    role: RoleType
    attributes: Mapping[str, Optional[str]] = field(default_factory=dict)
    entity_id: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "attributes", MappingProxyType(dict(self.attributes)))

    def get(self, attribute: str) -> Optional[str]:
        return self.attributes.get(attribute)

    def __reduce__(self):
        return (
            IndividualRecord,
            (self.record_id, self.certificate_id, self.role, dict(self.attributes), self.entity_id),
        )


@dataclass(frozen=True)
class Certificate:
    certificate_id: str
    cert_type: CertificateType
    event_year: int
    members: tuple[IndividualRecord, ...]

    def __post_init__(self):
        members = tuple(self.members)
        object.__setattr__(self, "members", members)
        if not members:
            raise ValueError(f"certificate {self.certificate_id} has no members")
        ids = [r.record_id for r in members]
        if len(set(ids)) != len(ids):
            raise ValueError(f"certificate {self.certificate_id} has duplicate record ids")
        for r in members:
            if r.certificate_id != self.certificate_id:
                raise ValueError(f"record {r.record_id} does not belong to {self.certificate_id}")
            if r.role.cert_type != self.cert_type:
                raise ValueError(
                    f"record {r.record_id} has role {r.role.name} of type "
                    f"{r.role.cert_type.value}, certificate is {self.cert_type.value}"
                )

    def __len__(self) -> int:
        return len(self.members)

    def entity_ids_distinct(self) -> bool:
        ents = [r.entity_id for r in self.members if r.entity_id is not None]
        return len(set(ents)) == len(ents)


Window = tuple[int, int]


class TemporalConstraintTable:
    """Allowed event-year differences per ordered role pair and per certificate-type pair.

    An entry ``(a, b) -> (lo, hi)`` requires ``year(b) - year(a)`` to lie in
    ``[lo, hi]`` for a record with role ``a`` and one with role ``b``. For a
    same-role entry the later year is subtracted from the earlier one.
    Pairs without an entry are unconstrained.
    """

    def __init__(
        self,
        role_windows: Mapping[tuple[RoleType, RoleType], Window] | None = None,
        cert_windows: Mapping[tuple[CertificateType, CertificateType], Window] | None = None,
    ):
        for table in (role_windows or {}, cert_windows or {}):
            for key, (lo, hi) in table.items():
                if lo > hi:
                    raise ValueError(f"temporal window for {key} has min {lo} > max {hi}")
        self.role_windows = MappingProxyType(dict(role_windows or {}))
        self.cert_windows = MappingProxyType(dict(cert_windows or {}))

    def __len__(self) -> int:
        return len(self.role_windows) + len(self.cert_windows)


def _window_check(key_a, key_b, year_a: int, year_b: int, table: Mapping) -> bool:
    if key_a == key_b:
        window = table.get((key_a, key_b))
        if window is None:
            return True
        diff = abs(year_b - year_a)
        return window[0] <= diff <= window[1]
    forward = table.get((key_a, key_b))
    backward = table.get((key_b, key_a))
    if forward is None and backward is None:
        return True
    if forward is not None and forward[0] <= year_b - year_a <= forward[1]:
        return True
    if backward is not None and backward[0] <= year_a - year_b <= backward[1]:
        return True
    return False


def temporal_check(
    role_1: RoleType, year_1: int, role_2: RoleType, year_2: int, table: TemporalConstraintTable
) -> bool:
    """True iff the two records' event-year difference fits the configured window."""
    return _window_check(role_1, role_2, year_1, year_2, table.role_windows)


def certificate_temporal_check(
    type_1: CertificateType, year_1: int, type_2: CertificateType, year_2: int, table: TemporalConstraintTable
) -> bool:
    return _window_check(type_1, type_2, year_1, year_2, table.cert_windows)


class Cardinality(str, enum.Enum):
    ONE_TO_ONE = "OneToOne"
    ONE_TO_MANY = "OneToMany"
    MANY_TO_ONE = "ManyToOne"
    MANY_TO_MANY = "ManyToMany"

    @classmethod
    def parse(cls, value: str) -> "Cardinality":
        aliases = {"1-to-1": "OneToOne", "1-to-m": "OneToMany", "m-to-1": "ManyToOne", "m-to-m": "ManyToMany"}
        value = aliases.get(value, value)
        for member in cls:
            if member.value.lower() == value.lower():
                return member
        raise ValueError(f"unknown cardinality {value!r}")


@dataclass(frozen=True)
class LinkConstraint:
    cardinality: Cardinality
    # solve each (left year, right year) slice separately
    per_year_pair: bool = False


class LinkConstraintTable:
    def __init__(self, entries: Mapping[str, LinkConstraint] | None = None):
        self.entries = MappingProxyType(dict(entries or {}))

    def get(self, link_type: str) -> LinkConstraint:
        return self.entries.get(link_type, LinkConstraint(Cardinality.MANY_TO_MANY))

    def __contains__(self, link_type: str) -> bool:
        return link_type in self.entries


@dataclass(frozen=True)
class LinkageType:
    """One way two certificates can be linked: via a person holding ``anchor`` roles.

    ``left`` is the certificate with the lower type order (or the earlier
    event year for same-type pairs).
    """

    name: str
    left_type: CertificateType
    right_type: CertificateType
    anchor: tuple[RoleType, RoleType]
    neighbor_types: frozenset = frozenset(CertificateType)

    @property
    def category(self) -> str:
        return f"{self.left_type.value}-{self.right_type.value}"


@dataclass(frozen=True)
class LifeSegment:
    """Event-year ordered records believed to describe one person."""

    records: tuple[tuple[IndividualRecord, int], ...]

    def __len__(self) -> int:
        return len(self.records)

    @property
    def record_ids(self) -> list[str]:
        return [r.record_id for r, _ in self.records]

    def violations(self, pairs: RolePairSet, temporal: TemporalConstraintTable | None = None) -> list[str]:
        problems = []
        years = [y for _, y in self.records]
        if any(a > b for a, b in zip(years, years[1:])):
            problems.append("event years not ordered")
        certs = [r.certificate_id for r, _ in self.records]
        if len(set(certs)) != len(certs):
            problems.append("two records from one certificate")
        items = self.records
        for i in range(len(items)):
            for j in range(i + 1, len(items)):
                (ri, yi), (rj, yj) = items[i], items[j]
                if not is_valid_role_pair(ri.role, rj.role, pairs):
                    problems.append(f"invalid role pair {ri.role.name}/{rj.role.name}")
                elif temporal is not None and not temporal_check(ri.role, yi, rj.role, yj, temporal):
                    problems.append(f"temporal window violated {ri.role.name}/{rj.role.name}")
        return problems


def order_by_event_year(records: Iterable[tuple[IndividualRecord, int]]) -> list[tuple[IndividualRecord, int]]:
    """Stable sort by event year, ties broken by certificate id."""
    return sorted(records, key=lambda item: (item[1], item[0].certificate_id))


def make_life_segment(
    records: Iterable[tuple[IndividualRecord, int]],
    pairs: RolePairSet,
    temporal: TemporalConstraintTable | None = None,
) -> LifeSegment:
    segment = LifeSegment(tuple(order_by_event_year(records)))
    problems = segment.violations(pairs, temporal)
    if problems:
        raise ValueError("invalid life segment: " + "; ".join(problems))
    return segment
