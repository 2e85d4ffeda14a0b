"""The certificate graph G and the linkage types that label its edges."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .ingest import RecordStore
from .model import CertificateType, LinkageType, RolePairSet, RoleType, RoleVocabulary, is_valid_role_pair
from .pairwise import LinkSet
from .validation import IntegrityError

# same-type categories never evaluated (one person has one birth and one death)
EXCLUDED_CATEGORIES = frozenset({(CertificateType.BIRTH, CertificateType.BIRTH), (CertificateType.DEATH, CertificateType.DEATH)})


@dataclass(frozen=True)
class EdgeSummary:
    multiplicity: int
    maximum: float
    total: float

    @property
    def mean(self) -> float:
        return self.total / self.multiplicity


class CertificateGraph:
    """Certificates as vertices, individual links as (multi-)edges.

    ``links[(c1, c2)]`` with ``c1 < c2`` holds ``(record in c1, record in c2, score)``
    triples sorted by record ids.
    """

    def __init__(self, store: RecordStore, links: Mapping[tuple[str, str], list[tuple[str, str, float]]]):
        self.store = store
        self.vertices = tuple(store.certificates)
        self.links = dict(sorted(links.items()))
        self.adjacency: dict[str, dict[str, EdgeSummary]] = {c: {} for c in self.vertices}
        for (c1, c2), items in self.links.items():
            if c1 == c2:
                raise IntegrityError(f"self edge on certificate {c1}")
            if not items:
                raise IntegrityError(f"edge {c1}-{c2} has no links")
            scores = [s for _, _, s in items]
            summary = EdgeSummary(len(scores), max(scores), sum(scores))
            self.adjacency[c1][c2] = summary
            self.adjacency[c2][c1] = summary

    @property
    def edges(self) -> list[tuple[str, str]]:
        return list(self.links)

    def __len__(self) -> int:
        return len(self.vertices)

    def cert_type(self, c: str) -> CertificateType:
        return self.store.certificates[c].cert_type

    def size(self, c: str) -> int:
        return len(self.store.certificates[c].members)

    def year(self, c: str) -> int:
        return self.store.certificates[c].event_year

    def degree(self, c: str) -> int:
        return len(self.adjacency[c])

    def summary(self, c: str, n: str) -> Optional[EdgeSummary]:
        return self.adjacency[c].get(n)

    def edge_links(self, c1: str, c2: str) -> list[tuple[str, str, float]]:
        """Links between two certificates, each oriented as (record in c1, record in c2, score)."""
        if c1 < c2:
            return list(self.links.get((c1, c2), ()))
        return [(b, a, s) for a, b, s in self.links.get((c2, c1), ())]

    def neighbors(self, c: str, types: Optional[Iterable[CertificateType]] = None) -> set[str]:
        if c not in self.adjacency:
            raise KeyError(f"unknown certificate {c!r}")
        if types is None:
            return set(self.adjacency[c])
        types = set(types)
        return {n for n in self.adjacency[c] if self.cert_type(n) in types}

    def to_tsv(self) -> str:
        lines = ["cert_id_1\tcert_id_2\tmultiplicity\tmax_similarity\tmean_similarity"]
        for (c1, c2), items in self.links.items():
            s = self.adjacency[c1][c2]
            lines.append(f"{c1}\t{c2}\t{s.multiplicity}\t{s.maximum:.6f}\t{s.mean:.6f}")
        return "\n".join(lines) + "\n"

    def write_tsv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_tsv(), encoding="utf-8")


def build_graph(links: LinkSet, store: RecordStore) -> CertificateGraph:
    grouped: dict[tuple[str, str], list[tuple[str, str, float]]] = {}
    for (a, b), score in links.items():
        if a not in store.records or b not in store.records:
            raise IntegrityError(f"link {a}-{b} refers to a record missing from the store")
        ca, cb = store.records[a].certificate_id, store.records[b].certificate_id
        if ca == cb:
            raise IntegrityError(f"link {a}-{b} joins two records of certificate {ca}")
        if ca < cb:
            grouped.setdefault((ca, cb), []).append((a, b, score))
        else:
            grouped.setdefault((cb, ca), []).append((b, a, score))
    for items in grouped.values():
        items.sort()
    return CertificateGraph(store, grouped)


def orient(store: RecordStore, c1: str, c2: str) -> tuple[str, str]:
    """Order two certificates as (left, right): lower type order first, then earlier year, then id."""
    a, b = store.certificates[c1], store.certificates[c2]
    key_a = (a.cert_type.order, a.event_year, a.certificate_id)
    key_b = (b.cert_type.order, b.event_year, b.certificate_id)
    return (c1, c2) if key_a <= key_b else (c2, c1)


def linkage_type_name(left: RoleType, right: RoleType) -> str:
    return f"{left.cert_type.value}.{left.name}>{right.cert_type.value}.{right.name}"


def generate_linkage_types(
    vocabulary: RoleVocabulary,
    role_pairs: RolePairSet,
    neighbor_types: Mapping[str, Iterable[CertificateType]] | None = None,
) -> list[LinkageType]:
    """One linkage type per valid anchor role pair between two certificate types.

    ``neighbor_types`` restricts relational evidence by category or by
    linkage-type name; unlisted types use every certificate type.
    """
    neighbor_types = neighbor_types or {}
    cert_types = sorted(CertificateType, key=lambda t: t.order)
    out = []
    for t1, t2 in itertools.combinations_with_replacement(cert_types, 2):
        if (t1, t2) in EXCLUDED_CATEGORIES:
            continue
        for left in vocabulary.roles_of(t1):
            for right in vocabulary.roles_of(t2):
                if not is_valid_role_pair(left, right, role_pairs):
                    continue
                name = linkage_type_name(left, right)
                category = f"{t1.value}-{t2.value}"
                types = neighbor_types.get(name, neighbor_types.get(category))
                types = frozenset(types) if types is not None else frozenset(CertificateType)
                out.append(LinkageType(name, t1, t2, (left, right), types))
    return out


class LinkageIndex:
    """Finds the linkage types an edge carries from the roles of its record links."""

    def __init__(self, linkage_types: Iterable[LinkageType]):
        self.types = {lt.name: lt for lt in linkage_types}
        self.by_anchor = {lt.anchor: lt for lt in self.types.values()}

    def __len__(self) -> int:
        return len(self.types)

    def edge_types(self, g: CertificateGraph, c1: str, c2: str) -> tuple[str, str, list[LinkageType]]:
        left, right = orient(g.store, c1, c2)
        records = g.store.records
        found = {}
        for a, b, _ in g.edge_links(left, right):
            lt = self.by_anchor.get((records[a].role, records[b].role))
            if lt is not None:
                found[lt.name] = lt
        return left, right, [found[k] for k in sorted(found)]
