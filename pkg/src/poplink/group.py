"""Group similarity of a certificate pair from the individual links between them."""

from __future__ import annotations

import logging
from typing import Iterable, Optional, Sequence, Union

from sklearn.base import BaseEstimator

from . import parallel
from .constraints import enforce
from .graph import CertificateGraph, LinkageIndex
from .matches import CertificateMatchSet
from .model import Certificate, LinkageType, LinkConstraintTable
from .validation import IntegrityError, check_choice, check_is_fitted, check_positive_int

log = logging.getLogger(__name__)

METHODS = ("maximum", "average", "group_size", "group_bipartite", "combined")


def _size(c: Union[Certificate, int]) -> int:
    return c if isinstance(c, int) else len(c)


def group_scores(c1: Union[Certificate, int], c2: Union[Certificate, int], sims: Sequence[float]) -> dict[str, float]:
    """All five group scores for two certificates (or their sizes) and their link scores."""
    n1, n2 = _size(c1), _size(c2)
    k = len(sims)
    if k == 0:
        raise ValueError("group scores need at least one link")
    if k >= n1 + n2:
        raise IntegrityError(f"{k} links between certificates of sizes {n1} and {n2}")
    total = float(sum(sims))
    s_max = float(max(sims))
    s_avr = total / k
    s_size = min(1.0, k / max(n1, n2))
    s_grp = min(1.0, total / (n1 + n2 - k))
    return {
        "maximum": s_max,
        "average": s_avr,
        "group_size": s_size,
        "group_bipartite": s_grp,
        "combined": (s_max + s_avr + s_size + s_grp) / 4.0,
    }


def one_to_one_links(links: Iterable[tuple[str, str, float]]) -> list[tuple[str, str, float]]:
    """Greedy record-level reduction: each record keeps at most one link."""
    seen_a, seen_b, kept = set(), set(), []
    for a, b, s in sorted(links, key=lambda t: (-t[2], t[0], t[1])):
        if a not in seen_a and b not in seen_b:
            seen_a.add(a)
            seen_b.add(b)
            kept.append((a, b, s))
    return kept


def edge_group_score(g: CertificateGraph, c1: str, c2: str, method: str) -> float:
    links = g.edge_links(c1, c2)
    n1, n2 = g.size(c1), g.size(c2)
    if len(links) >= n1 + n2:
        # too many raw links for the bipartite denominator; fall back to a matching
        links = one_to_one_links(links)
    return group_scores(n1, n2, [s for _, _, s in links])[method]


def _score_edges(edges):
    g = parallel.shared("graph")
    index = parallel.shared("index")
    method = parallel.shared("method")
    out = []
    for c1, c2 in edges:
        left, right, types = index.edge_types(g, c1, c2)
        if not types:
            continue
        score = edge_group_score(g, left, right, method)
        out.extend(((left, right, lt.name), score) for lt in types)
    return out


def score_group(
    g: CertificateGraph,
    method: str,
    linkage_types: Iterable[LinkageType],
    constraints: Optional[LinkConstraintTable] = None,
    mode: str = "optimal",
    workers: int = 1,
) -> CertificateMatchSet:
    check_choice("group method", method, METHODS)
    state = {"graph": g, "index": LinkageIndex(linkage_types), "method": method}
    scored = parallel.flatten(parallel.map_chunks(_score_edges, g.edges, workers=workers, state=state))
    matches = CertificateMatchSet(scored, method)
    if constraints is not None:
        years = {c: g.year(c) for c in g.vertices}
        matches = enforce(matches, constraints, mode, years)
    return matches


class GroupLinker(BaseEstimator):
    """Group certificate matcher producing M_G from the certificate graph."""

    def __init__(
        self,
        method: str = "combined",
        linkage_types: Sequence[LinkageType] = (),
        constraints: Optional[LinkConstraintTable] = None,
        assignment_mode: str = "optimal",
        workers: int = 1,
    ):
        self.method = method
        self.linkage_types = linkage_types
        self.constraints = constraints
        self.assignment_mode = assignment_mode
        self.workers = workers

    def fit(self, graph=None, y=None):
        check_choice("group method", self.method, METHODS)
        check_choice("assignment_mode", self.assignment_mode, ("greedy", "optimal"))
        check_positive_int("workers", self.workers)
        self.linkage_types_ = list(self.linkage_types)
        return self

    def predict(self, graph: CertificateGraph) -> CertificateMatchSet:
        check_is_fitted(self, "linkage_types_")
        return score_group(
            graph, self.method, self.linkage_types_, self.constraints, self.assignment_mode, self.workers
        )
