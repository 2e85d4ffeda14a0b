"""Attribute-wise record pair similarity, weight training and the link set S."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from . import parallel
from .blocking import BlockingKey, build_blocks, emit_candidates
from .comparators import ComparatorSpec
from .ingest import RecordStore
from .model import IndividualRecord, RolePairSet, TemporalConstraintTable
from .validation import ConfigError, check_choice, check_fraction, check_is_fitted, check_positive_int, check_weights

log = logging.getLogger(__name__)

MISSING_POLICIES = ("include_as_zero", "exclude_attribute")
WEIGHTING_MODES = ("uniform", "trained")
SCORE_DECIMALS = 6


@dataclass(frozen=True)
class AttributeWeighting:
    mode: str
    weights: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        check_choice("weighting mode", self.mode, WEIGHTING_MODES)
        object.__setattr__(self, "weights", check_weights(self.weights))
        if self.mode == "uniform" and any(w != 1.0 for w in self.weights.values()):
            raise ConfigError("uniform weighting requires every weight to be 1.0")

    @classmethod
    def uniform(cls, attributes: Iterable[str]) -> "AttributeWeighting":
        return cls("uniform", {a: 1.0 for a in attributes})


class RecordComparator:
    """Callable scoring two records as a weighted mean of attribute similarities."""

    def __init__(
        self,
        comparators: Mapping[str, ComparatorSpec],
        weighting: AttributeWeighting | None = None,
        missing_values: str = "exclude_attribute",
    ):
        check_choice("missing_values", missing_values, MISSING_POLICIES)
        weighting = weighting or AttributeWeighting.uniform(comparators)
        self.attributes = tuple(comparators)
        self.functions = {a: spec.build() for a, spec in comparators.items()}
        self.weights = {a: float(weighting.weights.get(a, 1.0)) for a in self.attributes}
        self.include_missing = missing_values == "include_as_zero"

    def attribute_sims(self, r1: IndividualRecord, r2: IndividualRecord) -> dict[str, Optional[float]]:
        out = {}
        for a in self.attributes:
            v1, v2 = r1.get(a), r2.get(a)
            out[a] = None if v1 is None or v2 is None else self.functions[a](v1, v2)
        return out

    def __call__(self, r1: IndividualRecord, r2: IndividualRecord) -> float:
        numerator = denominator = 0.0
        present_1 = present_2 = False
        for a in self.attributes:
            v1, v2 = r1.get(a), r2.get(a)
            present_1 |= v1 is not None
            present_2 |= v2 is not None
            w = self.weights[a]
            if v1 is None or v2 is None:
                if self.include_missing:
                    denominator += w
                continue
            numerator += w * self.functions[a](v1, v2)
            denominator += w
        if not (present_1 and present_2) or denominator == 0.0:
            return 0.0
        return min(1.0, numerator / denominator)


def record_pair_sim(
    r1: IndividualRecord,
    r2: IndividualRecord,
    comparators: Mapping[str, ComparatorSpec],
    weighting: AttributeWeighting | None = None,
    missing_values: str = "exclude_attribute",
) -> float:
    return RecordComparator(comparators, weighting, missing_values)(r1, r2)


def matched_record_pairs(store: RecordStore) -> list[tuple[str, str]]:
    """Record pairs on different certificates that share a gold entity id."""
    by_entity: dict[str, list[str]] = {}
    for rid in sorted(store.records):
        entity = store.records[rid].entity_id
        if entity is not None:
            by_entity.setdefault(entity, []).append(rid)
    pairs = []
    for members in by_entity.values():
        for i, a in enumerate(members):
            for b in members[i + 1:]:
                if store.records[a].certificate_id != store.records[b].certificate_id:
                    pairs.append((a, b))
    pairs.sort()
    return pairs


def train_weights(
    matched: Sequence[tuple[str, str]],
    store: RecordStore,
    comparators: Mapping[str, ComparatorSpec],
    sample_size: int,
    seed: int = 0,
) -> AttributeWeighting:
    """Contrast-of-means attribute weights from matched versus random record pairs.

    For each attribute the weight is the mean similarity over (a sample of)
    matched pairs minus the mean over an equally sized sample of random
    non-matched pairs, floored at zero and rescaled to mean 1.
    """
    if isinstance(sample_size, bool) or not isinstance(sample_size, (int, np.integer)) or sample_size <= 0:
        raise ConfigError(f"train_sample_size must be a positive integer, got {sample_size!r}")
    if not matched:
        raise ConfigError("no gold links available for weight training; use weighting: uniform")
    rng = np.random.default_rng(seed)
    matched = sorted(matched)
    if len(matched) > sample_size:
        picks = np.sort(rng.choice(len(matched), size=sample_size, replace=False))
        matched = [matched[i] for i in picks]
    matched_set = set(matched)
    ids = sorted(store.records)
    randoms: list[tuple[str, str]] = []
    attempts = 0
    while len(randoms) < len(matched) and attempts < 50 * len(matched) + 1000:
        attempts += 1
        i, j = rng.integers(0, len(ids), size=2)
        a, b = sorted((ids[i], ids[j]))
        ra, rb = store.records[a], store.records[b]
        if a == b or ra.certificate_id == rb.certificate_id or (a, b) in matched_set:
            continue
        if ra.entity_id is not None and ra.entity_id == rb.entity_id:
            continue
        randoms.append((a, b))
    scorer = RecordComparator(comparators)

    def mean_sims(pairs):
        totals = {a: [0.0, 0] for a in comparators}
        for a, b in pairs:
            for attr, s in scorer.attribute_sims(store.records[a], store.records[b]).items():
                if s is not None:
                    totals[attr][0] += s
                    totals[attr][1] += 1
        return {a: (t / n if n else 0.0) for a, (t, n) in totals.items()}

    m, u = mean_sims(matched), mean_sims(randoms)
    raw = {a: max(0.0, m[a] - u[a]) for a in comparators}
    mean = sum(raw.values()) / len(raw)
    if mean == 0.0:
        log.warning("no attribute separates matched from random pairs; keeping uniform weights")
        return AttributeWeighting("trained", {a: 1.0 for a in comparators})
    return AttributeWeighting("trained", {a: w / mean for a, w in raw.items()})


class LinkSet:
    """Scored record pairs at or above the threshold ``s_m``."""

    def __init__(self, entries: Mapping[tuple[str, str], float], threshold: float):
        self.threshold = check_fraction("s_m", threshold)
        clean = {}
        for (a, b), score in entries.items():
            if a == b:
                raise ValueError(f"self link {a}")
            key = (a, b) if a < b else (b, a)
            if score < threshold:
                raise ValueError(f"link {key} score {score} below threshold {threshold}")
            clean[key] = float(score)
        self.entries = dict(sorted(clean.items()))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[tuple[str, str]]:
        return iter(self.entries)

    def __contains__(self, pair) -> bool:
        a, b = pair
        return ((a, b) if a < b else (b, a)) in self.entries

    def score(self, a: str, b: str) -> Optional[float]:
        return self.entries.get((a, b) if a < b else (b, a))

    def items(self):
        return self.entries.items()

    def filter(self, threshold: float) -> "LinkSet":
        if threshold < self.threshold:
            raise ValueError("cannot lower the threshold of an already filtered link set")
        return LinkSet({k: v for k, v in self.entries.items() if v >= threshold}, threshold)

    def to_tsv(self) -> str:
        lines = ["record_id_1\trecord_id_2\tsimilarity"]
        lines += [f"{a}\t{b}\t{s:.{SCORE_DECIMALS}f}" for (a, b), s in self.entries.items()]
        return "\n".join(lines) + "\n"

    def write_tsv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_tsv(), encoding="utf-8")

    @classmethod
    def read_tsv(cls, path: str | Path, threshold: float) -> "LinkSet":
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle, delimiter="\t")
            next(reader)
            entries = {(a, b): float(s) for a, b, s in reader}
        return cls(entries, threshold)


def _score_chunk(pairs):
    scorer = parallel.shared("scorer")
    records = parallel.shared("records")
    return [round(scorer(records[a], records[b]), SCORE_DECIMALS) for a, b in pairs]


def build_link_set(
    candidates: Iterable,
    scorer: RecordComparator,
    s_m: float,
    store: RecordStore,
    workers: int = 1,
) -> LinkSet:
    """Score every candidate and keep those at or above ``s_m``.

    Scores are rounded to the serialized precision before thresholding so
    a link set read back from disk is identical to the one built here.
    """
    s_m = check_fraction("s_m", s_m)
    pairs = [(c.record_id_1, c.record_id_2) if hasattr(c, "record_id_1") else tuple(c) for c in candidates]
    state = {"scorer": scorer, "records": store.records}
    scores = parallel.flatten(parallel.map_chunks(_score_chunk, pairs, workers=workers, state=state))
    return LinkSet({p: s for p, s in zip(pairs, scores) if s >= s_m}, s_m)


class PairwiseLinker(TransformerMixin, BaseEstimator):
    """Blocking plus pair-wise scoring: turns a record store into the link set S.

    ``fit`` only matters for ``weighting="trained"``, where it learns
    attribute weights from records that share a gold entity id.
    """

    def __init__(
        self,
        comparators: Mapping[str, ComparatorSpec] | None = None,
        blocking_keys: Sequence[BlockingKey] = (),
        role_pairs: RolePairSet | None = None,
        temporal: TemporalConstraintTable | None = None,
        s_m: float = 0.4,
        missing_values: str = "exclude_attribute",
        weighting: str = "uniform",
        train_sample_size: int = 2000,
        census_decade_limit: bool = False,
        max_block_size: int = 10_000,
        random_state: int = 0,
        workers: int = 1,
    ):
        self.comparators = comparators
        self.blocking_keys = blocking_keys
        self.role_pairs = role_pairs
        self.temporal = temporal
        self.s_m = s_m
        self.missing_values = missing_values
        self.weighting = weighting
        self.train_sample_size = train_sample_size
        self.census_decade_limit = census_decade_limit
        self.max_block_size = max_block_size
        self.random_state = random_state
        self.workers = workers

    def _validate(self):
        if not self.comparators:
            raise ConfigError("at least one attribute comparator is required")
        check_fraction("s_m", self.s_m)
        check_choice("missing_values", self.missing_values, MISSING_POLICIES)
        check_choice("weighting", self.weighting, WEIGHTING_MODES)
        check_positive_int("workers", self.workers)
        check_positive_int("max_block_size", self.max_block_size)

    def fit(self, store: RecordStore, gold: Sequence[tuple[str, str]] | None = None):
        self._validate()
        if self.weighting == "trained":
            matched = matched_record_pairs(store) if gold is None else list(gold)
            self.weighting_ = train_weights(
                matched, store, self.comparators, self.train_sample_size, self.random_state
            )
        else:
            self.weighting_ = AttributeWeighting.uniform(self.comparators)
        self.scorer_ = RecordComparator(self.comparators, self.weighting_, self.missing_values)
        return self

    def candidates(self, store: RecordStore):
        blocks = build_blocks(store, self.blocking_keys)
        return emit_candidates(
            blocks,
            store,
            self.role_pairs or RolePairSet(),
            self.temporal or TemporalConstraintTable(),
            census_decade_limit=self.census_decade_limit,
            max_block_size=self.max_block_size,
            workers=self.workers,
        )

    def transform(self, store: RecordStore, candidates=None) -> LinkSet:
        check_is_fitted(self, "scorer_")
        if candidates is None:
            candidates = self.candidates(store)
        self.n_candidates_ = len(candidates)
        return build_link_set(candidates, self.scorer_, self.s_m, store, self.workers)
