"""Cardinality enforcement on certificate match sets (greedy or optimal)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .matches import CertificateMatchSet
from .model import Cardinality, LinkageType, LinkConstraint, LinkConstraintTable
from .validation import ConfigError, check_choice

MODES = ("greedy", "optimal")
PER_PERSON = ("once", "many", "once_per_year")
PER_CERTIFICATE = ("one", "many")

Pair = tuple[str, str]


@dataclass(frozen=True)
class RoleProperties:
    gender: str = "any"
    per_certificate: str = "one"
    per_person: str = "many"

    def __post_init__(self):
        check_choice("gender", self.gender, ("f", "m", "any"))
        check_choice("per_certificate", self.per_certificate, PER_CERTIFICATE)
        check_choice("per_person", self.per_person, PER_PERSON)


def derive_constraint(lt: LinkageType, props: Mapping[str, RoleProperties]) -> LinkConstraint:
    """Cardinality implied by the anchor roles.

    A left certificate can match at most one right certificate when its
    anchor role occurs once per certificate and a person holds the right
    role only once; symmetrically for the right side. Roles held once per
    year limit matches within each pair of event years only.
    """
    left, right = props[lt.anchor[0].name], props[lt.anchor[1].name]

    def limited(own: RoleProperties, other: RoleProperties) -> bool:
        return own.per_certificate == "one" and other.per_person in ("once", "once_per_year")

    left_limited = limited(left, right)
    right_limited = limited(right, left)
    per_year = (left_limited and right.per_person == "once_per_year") or (
        right_limited and left.per_person == "once_per_year"
    )
    if left_limited and right_limited:
        card = Cardinality.ONE_TO_ONE
    elif right_limited:
        card = Cardinality.ONE_TO_MANY
    elif left_limited:
        card = Cardinality.MANY_TO_ONE
    else:
        card = Cardinality.MANY_TO_MANY
    return LinkConstraint(card, per_year and card is not Cardinality.MANY_TO_MANY)


def derive_constraint_table(
    linkage_types: Iterable[LinkageType],
    props: Mapping[str, RoleProperties],
    overrides: Mapping[str, str] | None = None,
) -> LinkConstraintTable:
    """Constraints for every linkage type; overrides match a type name or its category."""
    overrides = dict(overrides or {})
    entries = {}
    used = set()
    for lt in linkage_types:
        derived = derive_constraint(lt, props)
        for key in (lt.name, lt.category):
            if key in overrides:
                derived = LinkConstraint(Cardinality.parse(overrides[key]), derived.per_year_pair)
                used.add(key)
                break
        entries[lt.name] = derived
    unknown = set(overrides) - used
    if unknown:
        raise ConfigError(f"link constraint overrides name unknown linkage types: {sorted(unknown)}")
    return LinkConstraintTable(entries)


def greedy_one_to_one(scores: Mapping[Pair, float]) -> dict[Pair, float]:
    used_left, used_right, kept = set(), set(), {}
    for (a, b), s in sorted(scores.items(), key=lambda kv: (-kv[1], kv[0][0], kv[0][1])):
        if a in used_left or b in used_right:
            continue
        used_left.add(a)
        used_right.add(b)
        kept[(a, b)] = s
    return kept


def _components(scores: Mapping[Pair, float]) -> list[list[Pair]]:
    parent: dict[tuple[int, str], tuple[int, str]] = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in scores:
        u, v = (0, a), (1, b)
        parent.setdefault(u, u)
        parent.setdefault(v, v)
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    groups: dict[tuple[int, str], list[Pair]] = {}
    for pair in sorted(scores):
        groups.setdefault(find((0, pair[0])), []).append(pair)
    return [groups[k] for k in sorted(groups)]


def optimal_one_to_one(scores: Mapping[Pair, float]) -> dict[Pair, float]:
    """Maximum-weight bipartite matching, solved per connected component."""
    kept = {}
    for component in _components(scores):
        if len(component) == 1:
            kept[component[0]] = scores[component[0]]
            continue
        lefts = sorted({a for a, _ in component})
        rights = sorted({b for _, b in component})
        li = {c: i for i, c in enumerate(lefts)}
        ri = {c: i for i, c in enumerate(rights)}
        weight = np.zeros((len(lefts), len(rights)))
        present = np.zeros((len(lefts), len(rights)), dtype=bool)
        for a, b in component:
            weight[li[a], ri[b]] = scores[(a, b)]
            present[li[a], ri[b]] = True
        rows, cols = linear_sum_assignment(weight, maximize=True)
        for i, j in zip(rows, cols):
            if present[i, j]:
                kept[(lefts[i], rights[j])] = scores[(lefts[i], rights[j])]
    return kept


def best_per_right(scores: Mapping[Pair, float]) -> dict[Pair, float]:
    best: dict[str, tuple[float, str]] = {}
    for (a, b), s in scores.items():
        current = best.get(b)
        if current is None or s > current[0] or (s == current[0] and a < current[1]):
            best[b] = (s, a)
    return {(a, b): s for b, (s, a) in best.items()}


def apply_cardinality(scores: Mapping[Pair, float], cardinality: Cardinality, mode: str) -> dict[Pair, float]:
    check_choice("assignment mode", mode, MODES)
    if cardinality is Cardinality.MANY_TO_MANY:
        return dict(scores)
    if cardinality is Cardinality.ONE_TO_MANY:
        return best_per_right(scores)
    if cardinality is Cardinality.MANY_TO_ONE:
        flipped = best_per_right({(b, a): s for (a, b), s in scores.items()})
        return {(a, b): s for (b, a), s in flipped.items()}
    if mode == "greedy":
        return greedy_one_to_one(scores)
    return optimal_one_to_one(scores)


def enforce(
    matches: CertificateMatchSet,
    table: LinkConstraintTable,
    mode: str = "optimal",
    years: Optional[Mapping[str, int]] = None,
) -> CertificateMatchSet:
    """Apply each linkage type's cardinality rule independently.

    Every linkage type present in ``matches`` must be listed in ``table``.
    Rules flagged ``per_year_pair`` are solved separately for each
    (left event year, right event year) slice, which needs ``years``.
    """
    check_choice("assignment mode", mode, MODES)
    kept: dict[tuple[str, str, str], float] = {}
    for lt, scores in matches.by_link_type().items():
        if lt not in table.entries:
            raise ConfigError(f"no link constraint configured for linkage type {lt!r}")
        rule = table.entries[lt]
        if rule.per_year_pair and rule.cardinality is not Cardinality.MANY_TO_MANY:
            if years is None:
                raise ValueError("per-year constraints need certificate event years")
            slices: dict[tuple[int, int], dict[Pair, float]] = {}
            for (a, b), s in scores.items():
                slices.setdefault((years[a], years[b]), {})[(a, b)] = s
        else:
            slices = {(0, 0): scores}
        for key in sorted(slices):
            for (a, b), s in apply_cardinality(slices[key], rule.cardinality, mode).items():
                kept[(a, b, lt)] = s
    return CertificateMatchSet(kept, matches.method)
