"""Attribute-level similarity functions, all returning a score in [0, 1]."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Optional

from .validation import ConfigError

KINDS = ("exact", "levenshtein", "jaro_winkler", "year_diff")


def edit_distance(s1: str, s2: str) -> int:
    if s1 == s2:
        return 0
    if len(s1) < len(s2):
        s1, s2 = s2, s1
    if not s2:
        return len(s1)
    previous = list(range(len(s2) + 1))
    for i, c1 in enumerate(s1, 1):
        current = [i]
        for j, c2 in enumerate(s2, 1):
            current.append(min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (c1 != c2)))
        previous = current
    return previous[-1]


@lru_cache(maxsize=200_000)
def levenshtein_sim(s1: str, s2: str) -> float:
    longest = max(len(s1), len(s2))
    if longest == 0:
        return 1.0
    return 1.0 - edit_distance(s1, s2) / longest


def jaro_sim(s1: str, s2: str) -> float:
    if s1 == s2:
        return 1.0
    len1, len2 = len(s1), len(s2)
    if not len1 or not len2:
        return 0.0
    window = max(max(len1, len2) // 2 - 1, 0)
    flags1 = [False] * len1
    flags2 = [False] * len2
    matches = 0
    for i, ch in enumerate(s1):
        lo, hi = max(0, i - window), min(len2, i + window + 1)
        for j in range(lo, hi):
            if not flags2[j] and s2[j] == ch:
                flags1[i] = flags2[j] = True
                matches += 1
                break
    if not matches:
        return 0.0
    half_transpositions = 0
    k = 0
    for i in range(len1):
        if flags1[i]:
            while not flags2[k]:
                k += 1
            if s1[i] != s2[k]:
                half_transpositions += 1
            k += 1
    t = half_transpositions // 2
    return (matches / len1 + matches / len2 + (matches - t) / matches) / 3.0


@lru_cache(maxsize=200_000)
def jaro_winkler_sim(
    s1: str, s2: str, prefix_weight: float = 0.1, max_prefix: int = 4, boost_threshold: float = 0.7
) -> float:
    """Jaro similarity with Winkler's common-prefix boost.

    The boost is applied only when the Jaro score exceeds ``boost_threshold``
    (Winkler's original rule). ``prefix_weight`` must lie in [0, 0.25] so the
    result stays within [0, 1].
    """
    if not 0.0 <= prefix_weight <= 0.25:
        raise ConfigError(f"jaro_winkler prefix_weight must be in [0, 0.25], got {prefix_weight}")
    jaro = jaro_sim(s1, s2)
    if jaro <= boost_threshold:
        return jaro
    prefix = 0
    for a, b in zip(s1[:max_prefix], s2[:max_prefix]):
        if a != b:
            break
        prefix += 1
    return min(1.0, jaro + prefix * prefix_weight * (1.0 - jaro))


def year_diff_sim(y1: int, y2: int, d_max: int = 10) -> float:
    if d_max <= 0:
        raise ConfigError(f"year_diff d_max must be positive, got {d_max}")
    return max(0.0, 1.0 - abs(int(y1) - int(y2)) / d_max)


def exact_sim(v1: str, v2: str) -> float:
    return 1.0 if v1.casefold() == v2.casefold() else 0.0


@dataclass(frozen=True)
class ComparatorSpec:
    kind: str
    parameters: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown comparator {self.kind!r}; expected one of {KINDS}")
        params = dict(self.parameters)
        allowed = {
            "exact": set(),
            "levenshtein": set(),
            "jaro_winkler": {"prefix_weight", "max_prefix", "boost_threshold"},
            "year_diff": {"d_max"},
        }[self.kind]
        unknown = set(params) - allowed
        if unknown:
            raise ConfigError(f"comparator {self.kind} got unknown parameters {sorted(unknown)}")
        if self.kind == "jaro_winkler" and not 0.0 <= params.get("prefix_weight", 0.1) <= 0.25:
            raise ConfigError("jaro_winkler prefix_weight must be in [0, 0.25]")
        if self.kind == "year_diff" and params.get("d_max", 10) <= 0:
            raise ConfigError("year_diff d_max must be positive")
        object.__setattr__(self, "parameters", params)

    def build(self) -> Callable[[str, str], float]:
        p = self.parameters
        if self.kind == "exact":
            return exact_sim
        if self.kind == "levenshtein":
            return levenshtein_sim
        if self.kind == "jaro_winkler":
            weight = float(p.get("prefix_weight", 0.1))
            max_prefix = int(p.get("max_prefix", 4))
            threshold = float(p.get("boost_threshold", 0.7))
            return lambda a, b: jaro_winkler_sim(a, b, weight, max_prefix, threshold)
        d_max = int(p.get("d_max", 10))
        return lambda a, b: _year_or_zero(a, b, d_max)


def _year_or_zero(a: str, b: str, d_max: int) -> float:
    try:
        return year_diff_sim(int(a), int(b), d_max)
    except ValueError:
        return 0.0


def compare(spec: ComparatorSpec, v1: Optional[str], v2: Optional[str]) -> Optional[float]:
    """Similarity of two attribute values, or ``None`` when either is missing."""
    if v1 is None or v2 is None:
        return None
    return spec.build()(v1, v2)
