"""Neighbourhood-based relational similarity between linked certificates.

Every function compares the neighbourhoods of ``c1`` and ``c2`` in the
certificate graph, with both vertices themselves left out and, when
``types`` is given, only neighbours of those certificate types counted.
Multiplicity ``m(c, n)`` is the number of individual links on edge (c, n).
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Optional, Sequence

from sklearn.base import BaseEstimator

from . import parallel
from .constraints import enforce
from .graph import CertificateGraph, EdgeSummary, LinkageIndex
from .matches import CertificateMatchSet
from .model import CertificateType, LinkageType, LinkConstraintTable
from .validation import check_choice, check_is_fitted, check_positive_int

METHODS = (
    "jaccard",
    "multi_jaccard",
    "average",
    "multi_average",
    "maximum",
    "adar_adamic",
    "multi_adar_adamic",
)


def _hoods(g: CertificateGraph, c1: str, c2: str, types) -> tuple[dict[str, EdgeSummary], dict[str, EdgeSummary]]:
    def hood(c):
        adj = g.adjacency[c]
        if types is None:
            return {n: s for n, s in adj.items() if n != c1 and n != c2}
        return {n: s for n, s in adj.items() if n != c1 and n != c2 and g.cert_type(n) in types}

    return hood(c1), hood(c2)


def rel_jaccard(g, c1, c2, types=None) -> float:
    h1, h2 = _hoods(g, c1, c2, types)
    union = len(h1.keys() | h2.keys())
    return len(h1.keys() & h2.keys()) / union if union else 0.0


def rel_multi_jaccard(g, c1, c2, types=None) -> float:
    h1, h2 = _hoods(g, c1, c2, types)
    low = high = 0
    for n in h1.keys() | h2.keys():
        m1 = h1[n].multiplicity if n in h1 else 0
        m2 = h2[n].multiplicity if n in h2 else 0
        low += min(m1, m2)
        high += max(m1, m2)
    return low / high if high else 0.0


def rel_average(g, c1, c2, types=None) -> float:
    """Mean over common neighbours of the averaged edge maxima."""
    h1, h2 = _hoods(g, c1, c2, types)
    common = h1.keys() & h2.keys()
    if not common:
        return 0.0
    return sum((h1[n].maximum + h2[n].maximum) / 2.0 for n in common) / len(common)


def rel_multi_average(g, c1, c2, types=None) -> float:
    """Mean over common neighbours of the pooled mean link similarity on both edges."""
    h1, h2 = _hoods(g, c1, c2, types)
    common = h1.keys() & h2.keys()
    if not common:
        return 0.0
    total = 0.0
    for n in common:
        total += (h1[n].total + h2[n].total) / (h1[n].multiplicity + h2[n].multiplicity)
    return min(1.0, total / len(common))


def rel_maximum(g, c1, c2, types=None) -> float:
    h1, h2 = _hoods(g, c1, c2, types)
    common = h1.keys() & h2.keys()
    if not common:
        return 0.0
    return max(max(h1[n].maximum, h2[n].maximum) for n in common)


def adar_weight(degree: int) -> float:
    return 1.0 if degree <= 1 else 1.0 / math.log(1.0 + degree)


def rel_adar_adamic(g, c1, c2, types=None) -> float:
    h1, h2 = _hoods(g, c1, c2, types)
    union = h1.keys() | h2.keys()
    if not union:
        return 0.0
    num = sum(adar_weight(g.degree(n)) for n in h1.keys() & h2.keys())
    den = sum(adar_weight(g.degree(n)) for n in union)
    return num / den


def rel_multi_adar_adamic(g, c1, c2, types=None) -> float:
    h1, h2 = _hoods(g, c1, c2, types)
    num = den = 0.0
    for n in h1.keys() | h2.keys():
        m1 = h1[n].multiplicity if n in h1 else 0
        m2 = h2[n].multiplicity if n in h2 else 0
        u = adar_weight(g.degree(n))
        num += u * min(m1, m2)
        den += u * max(m1, m2)
    return num / den if den else 0.0


FUNCTIONS: dict[str, Callable[..., float]] = {
    "jaccard": rel_jaccard,
    "multi_jaccard": rel_multi_jaccard,
    "average": rel_average,
    "multi_average": rel_multi_average,
    "maximum": rel_maximum,
    "adar_adamic": rel_adar_adamic,
    "multi_adar_adamic": rel_multi_adar_adamic,
}


def _score_edges(edges):
    g = parallel.shared("graph")
    index = parallel.shared("index")
    func = FUNCTIONS[parallel.shared("method")]
    out = []
    for c1, c2 in edges:
        left, right, types = index.edge_types(g, c1, c2)
        cache: dict[frozenset, float] = {}
        for lt in types:
            key = lt.neighbor_types
            if key not in cache:
                filt = None if key == frozenset(CertificateType) else key
                cache[key] = func(g, left, right, filt)
            out.append(((left, right, lt.name), cache[key]))
    return out


def score_relational(
    g: CertificateGraph,
    method: str,
    linkage_types: Iterable[LinkageType],
    constraints: Optional[LinkConstraintTable] = None,
    mode: str = "optimal",
    workers: int = 1,
) -> CertificateMatchSet:
    """Score every graph edge once per linkage type it carries, then constrain."""
    check_choice("relational method", method, METHODS)
    state = {"graph": g, "index": LinkageIndex(linkage_types), "method": method}
    scored = parallel.flatten(parallel.map_chunks(_score_edges, g.edges, workers=workers, state=state))
    matches = CertificateMatchSet(scored, method)
    if constraints is not None:
        years = {c: g.year(c) for c in g.vertices}
        matches = enforce(matches, constraints, mode, years)
    return matches


class RelationalLinker(BaseEstimator):
    """Relational certificate matcher producing M_R from the certificate graph."""

    def __init__(
        self,
        method: str = "multi_adar_adamic",
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
        check_choice("relational method", self.method, METHODS)
        check_choice("assignment_mode", self.assignment_mode, ("greedy", "optimal"))
        check_positive_int("workers", self.workers)
        self.linkage_types_ = list(self.linkage_types)
        return self

    def predict(self, graph: CertificateGraph) -> CertificateMatchSet:
        check_is_fitted(self, "linkage_types_")
        return score_relational(
            graph, self.method, self.linkage_types_, self.constraints, self.assignment_mode, self.workers
        )
