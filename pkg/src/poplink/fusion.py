"""Score fusion of relational and group matches, and life-segment assembly."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional

from sklearn.base import BaseEstimator

from .ingest import RecordStore
from .matches import SCORE_DECIMALS, CertificateMatchSet
from .model import (
    LifeSegment,
    LinkageType,
    RolePairSet,
    TemporalConstraintTable,
    certificate_temporal_check,
    is_valid_role_pair,
    order_by_event_year,
    temporal_check,
)
from .pairwise import LinkSet
from .validation import ConfigError, check_fraction


@dataclass(frozen=True)
class FusionParams:
    w_R: float = 0.5
    w_G: float = 0.5
    s_t: float = 0.3

    def __post_init__(self):
        w_r = check_fraction("w_R", self.w_R)
        w_g = check_fraction("w_G", self.w_G)
        check_fraction("s_t", self.s_t)
        if not math.isclose(w_r + w_g, 1.0, abs_tol=1e-9):
            raise ConfigError(f"w_R + w_G must equal 1, got {w_r + w_g}")


def fuse(m_r: CertificateMatchSet, m_g: CertificateMatchSet, p: FusionParams) -> CertificateMatchSet:
    """Weighted sum over matches found by both methods, kept when it reaches ``s_t``."""
    out = {}
    for key in m_r.keys() & m_g.keys():
        score = round(p.w_R * m_r[key] + p.w_G * m_g[key], SCORE_DECIMALS)
        if score >= p.s_t:
            out[key] = score
    return CertificateMatchSet(out, "fused")


class ResultFusion(BaseEstimator):
    def __init__(self, w_R: float = 0.5, w_G: float = 0.5, s_t: float = 0.3):
        self.w_R = w_R
        self.w_G = w_G
        self.s_t = s_t

    def fit(self, X=None, y=None):
        self.params_ = FusionParams(self.w_R, self.w_G, self.s_t)
        return self

    def predict(self, m_r: CertificateMatchSet, m_g: CertificateMatchSet) -> CertificateMatchSet:
        if not hasattr(self, "params_"):
            self.fit()
        return fuse(m_r, m_g, self.params_)


def materialize_record_links(
    m_f: CertificateMatchSet,
    store: RecordStore,
    linkage_types: Mapping[str, LinkageType],
    links: Optional[LinkSet] = None,
) -> dict[tuple[str, str], tuple[float, float]]:
    """Record-level links implied by certificate matches.

    Each match links the records holding its linkage type's anchor roles.
    When a certificate has several such records (census children), pairs
    are chosen greedily one-to-one by their pair-wise similarity. Values are
    (certificate match score, pair-wise score).
    """
    out: dict[tuple[str, str], tuple[float, float]] = {}
    for (left, right, lt_name), score in m_f.items():
        lt = linkage_types[lt_name]
        lefts = [r.record_id for r in store.certificates[left].members if r.role == lt.anchor[0]]
        rights = [r.record_id for r in store.certificates[right].members if r.role == lt.anchor[1]]
        options = []
        for a in lefts:
            for b in rights:
                pair_score = links.score(a, b) if links is not None else None
                options.append((-(pair_score or 0.0), a, b))
        used_a, used_b = set(), set()
        for neg, a, b in sorted(options):
            if a in used_a or b in used_b:
                continue
            used_a.add(a)
            used_b.add(b)
            key = (a, b) if a < b else (b, a)
            value = (score, -neg)
            if key not in out or value > out[key]:
                out[key] = value
    return dict(sorted(out.items()))


def _compatible(store: RecordStore, group_a: list[str], group_b: list[str], pairs, temporal) -> bool:
    recs, certs = store.records, store.certificates
    for a in group_a:
        ra = recs[a]
        ca = certs[ra.certificate_id]
        for b in group_b:
            rb = recs[b]
            if ra.certificate_id == rb.certificate_id:
                return False
            if not is_valid_role_pair(ra.role, rb.role, pairs):
                return False
            if temporal is None:
                continue
            cb = certs[rb.certificate_id]
            if not temporal_check(ra.role, ca.event_year, rb.role, cb.event_year, temporal):
                return False
            if not certificate_temporal_check(ca.cert_type, ca.event_year, cb.cert_type, cb.event_year, temporal):
                return False
    return True


def assemble_life_segments(
    m_f: CertificateMatchSet,
    store: RecordStore,
    linkage_types: Mapping[str, LinkageType] | Iterable[LinkageType],
    role_pairs: RolePairSet,
    temporal: Optional[TemporalConstraintTable] = None,
    links: Optional[LinkSet] = None,
) -> list[LifeSegment]:
    """Partition all records into life segments.

    Connected components of the record links are repaired by deleting their
    weakest link until no component holds two records of one certificate,
    an invalid role pair or a temporal window violation. Deleting the
    weakest link of a component undoes the last merge of a strongest-first
    union of its links, so the repair keeps the largest valid subtrees of
    that merge tree. Unlinked records become singleton segments.
    """
    if not isinstance(linkage_types, Mapping):
        linkage_types = {lt.name: lt for lt in linkage_types}
    record_links = materialize_record_links(m_f, store, linkage_types, links)

    # merge tree: leaves are records, internal nodes are the tree links
    node_members: dict[object, Optional[list[str]]] = {rid: [rid] for rid in store.records}
    node_valid: dict[object, bool] = {rid: True for rid in store.records}
    children: dict[object, tuple[object, object]] = {}
    top = {rid: rid for rid in store.records}
    root = {rid: rid for rid in store.records}

    def find(x):
        while root[x] != x:
            root[x] = root[root[x]]
            x = root[x]
        return x

    order = sorted(record_links.items(), key=lambda kv: (-kv[1][0], -kv[1][1], kv[0]))
    for k, ((a, b), _) in enumerate(order):
        ra, rb = find(a), find(b)
        if ra == rb:
            continue
        na, nb = top[ra], top[rb]
        node = ("merge", k)
        children[node] = (na, nb)
        valid = (
            node_valid[na]
            and node_valid[nb]
            and _compatible(store, node_members[na], node_members[nb], role_pairs, temporal)
        )
        node_valid[node] = valid
        # invalid nodes are never emitted, so only valid ones keep a member list
        node_members[node] = node_members[na] + node_members[nb] if valid else None
        keep, drop = (ra, rb) if ra < rb else (rb, ra)
        root[drop] = keep
        top[keep] = node

    groups: list[list[str]] = []
    stack = [top[r] for r in store.records if find(r) == r]
    while stack:
        node = stack.pop()
        if node_valid[node]:
            groups.append(node_members[node])
        else:
            stack.extend(children[node])

    segments = []
    for group in sorted(groups, key=min):
        items = [(store.records[rid], store.event_year(rid)) for rid in group]
        segments.append(LifeSegment(tuple(order_by_event_year(items))))
    return segments


def segments_to_tsv(segments: Iterable[LifeSegment]) -> str:
    lines = ["segment_id\tposition\trecord_id\tcertificate_id\tevent_year"]
    for i, seg in enumerate(segments):
        for pos, (record, year) in enumerate(seg.records):
            lines.append(f"S{i:06d}\t{pos}\t{record.record_id}\t{record.certificate_id}\t{year}")
    return "\n".join(lines) + "\n"


def write_segments(segments: Iterable[LifeSegment], path: str | Path) -> None:
    Path(path).write_text(segments_to_tsv(segments), encoding="utf-8")
