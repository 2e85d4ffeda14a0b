"""Precision, recall and step-wise AUC-PR against gold certificate links."""

from __future__ import annotations

import csv
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .graph import EXCLUDED_CATEGORIES
from .ingest import RecordStore
from .matches import CertificateMatchSet
from .model import CertificateType

CATEGORIES = (
    "Birth-Census",
    "Birth-Death",
    "Birth-Marriage",
    "Census-Census",
    "Census-Death",
    "Census-Marriage",
    "Death-Marriage",
    "Marriage-Marriage",
)

Pair = tuple[str, str]


def canonical(c1: str, c2: str) -> Pair:
    return (c1, c2) if c1 < c2 else (c2, c1)


def category_of(t1: CertificateType, t2: CertificateType) -> str:
    a, b = sorted((t1, t2), key=lambda t: t.order)
    return f"{a.value}-{b.value}"


class GoldLinkSet:
    """Manually (or synthetically) known certificate links."""

    def __init__(self, pairs: Iterable[Pair] | Mapping[Pair, str]):
        labels = dict(pairs) if isinstance(pairs, Mapping) else {p: "" for p in pairs}
        self.labels: dict[Pair, str] = {}
        for (a, b), label in labels.items():
            if a == b:
                raise ValueError(f"gold link joins certificate {a} to itself")
            self.labels[canonical(a, b)] = label or ""
        self.labels = dict(sorted(self.labels.items()))
        self.pairs = frozenset(self.labels)

    def __len__(self) -> int:
        return len(self.pairs)

    def __contains__(self, pair) -> bool:
        return canonical(*pair) in self.pairs

    def __iter__(self):
        return iter(self.labels)

    @classmethod
    def from_store(cls, store: RecordStore) -> "GoldLinkSet":
        """Certificate pairs sharing an entity, outside the never-evaluated categories."""
        by_entity: dict[str, set[str]] = {}
        for r in store.records.values():
            if r.entity_id is not None:
                by_entity.setdefault(r.entity_id, set()).add(r.certificate_id)
        labels = {}
        for certs in by_entity.values():
            certs = sorted(certs)
            for i, a in enumerate(certs):
                for b in certs[i + 1:]:
                    ta, tb = store.certificates[a].cert_type, store.certificates[b].cert_type
                    key = tuple(sorted((ta, tb), key=lambda t: t.order))
                    if key in EXCLUDED_CATEGORIES:
                        continue
                    labels[(a, b)] = category_of(ta, tb)
        return cls(labels)

    def to_tsv(self) -> str:
        lines = ["cert_id_1\tcert_id_2\tlink_type"]
        lines += [f"{a}\t{b}\t{label}" for (a, b), label in self.labels.items()]
        return "\n".join(lines) + "\n"

    def write_tsv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_tsv(), encoding="utf-8")

    @classmethod
    def read_tsv(cls, path: str | Path) -> "GoldLinkSet":
        labels = {}
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle, delimiter="\t")
            header = next(reader, None)
            if header is None or header[:2] != ["cert_id_1", "cert_id_2"]:
                raise ValueError(f"{path}: expected a cert_id_1, cert_id_2 header")
            for row in reader:
                if not row:
                    continue
                labels[(row[0], row[1])] = row[2] if len(row) > 2 else ""
        return cls(labels)


def _as_pairs(auto) -> set[Pair]:
    if isinstance(auto, CertificateMatchSet):
        return set(auto.certificate_pairs())
    if isinstance(auto, Mapping):
        return {canonical(*p) for p in auto}
    return {canonical(*p) for p in auto}


def confusion(auto, gold: GoldLinkSet | Iterable[Pair]) -> tuple[int, int, int]:
    predicted = _as_pairs(auto)
    truth = gold.pairs if isinstance(gold, GoldLinkSet) else {canonical(*p) for p in gold}
    tp = len(predicted & truth)
    return tp, len(predicted) - tp, len(truth) - tp


def precision_recall(tp: int, fp: int, fn: int) -> tuple[float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return precision, recall


def pr_curve(scored: Sequence[tuple[float, bool]], n_positives: Optional[int] = None) -> list[tuple[float, float, float]]:
    """(threshold, precision, recall) at every distinct score, highest first.

    Recall is relative to ``n_positives`` when given, so gold links never
    scored count as misses; otherwise to the positives in ``scored``.
    """
    positives = sum(1 for _, y in scored if y) if n_positives is None else n_positives
    if positives <= 0:
        raise ValueError("AUC-PR is undefined without positive examples")
    ordered = sorted(scored, key=lambda t: -t[0])
    points = []
    tp = fp = 0
    i = 0
    while i < len(ordered):
        threshold = ordered[i][0]
        while i < len(ordered) and ordered[i][0] == threshold:
            if ordered[i][1]:
                tp += 1
            else:
                fp += 1
            i += 1
        points.append((threshold, tp / (tp + fp), tp / positives))
    return points


def auc_pr(scored: Sequence[tuple[float, bool]], n_positives: Optional[int] = None) -> float:
    """Step-wise area: sum of recall increments times precision at each threshold."""
    area = 0.0
    previous_recall = 0.0
    for _, precision, recall in pr_curve(scored, n_positives):
        area += (recall - previous_recall) * precision
        previous_recall = recall
    return area


@dataclass
class PRReport:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    auc_pr: float
    pr_curve: list = field(default_factory=list)

    def to_text(self, prefix: str = "") -> str:
        rows = [
            ("tp", self.tp),
            ("fp", self.fp),
            ("fn", self.fn),
            ("precision", f"{self.precision:.6f}"),
            ("recall", f"{self.recall:.6f}"),
            ("auc_pr", f"{self.auc_pr:.6f}" if not math.isnan(self.auc_pr) else "nan"),
        ]
        return "".join(f"{prefix}{k} = {v}\n" for k, v in rows)


def evaluate_scores(scores: Mapping[Pair, float], gold: GoldLinkSet) -> PRReport:
    """Report for certificate-pair scores: every scored pair counts as predicted."""
    scored = {canonical(*p): s for p, s in scores.items()}
    tp, fp, fn = confusion(scored, gold)
    precision, recall = precision_recall(tp, fp, fn)
    if len(gold):
        rows = [(s, p in gold.pairs) for p, s in sorted(scored.items())]
        curve = pr_curve(rows, len(gold)) if rows else []
        auc = auc_pr(rows, len(gold)) if rows else 0.0
    else:
        curve, auc = [], float("nan")
    return PRReport(tp, fp, fn, precision, recall, auc, curve)


def evaluate_by_category(
    scores: Mapping[Pair, float], gold: GoldLinkSet, store: RecordStore
) -> dict[str, PRReport]:
    """Overall report under ``all`` plus one report per certificate-type category."""
    def cat(pair):
        a, b = pair
        return category_of(store.certificates[a].cert_type, store.certificates[b].cert_type)

    scored = {canonical(*p): s for p, s in scores.items()}
    reports = {"all": evaluate_scores(scored, gold)}
    for category in CATEGORIES:
        sub_scores = {p: s for p, s in scored.items() if cat(p) == category}
        sub_gold = GoldLinkSet({p: l for p, l in gold.labels.items() if cat(p) == category})
        reports[category] = evaluate_scores(sub_scores, sub_gold)
    return reports


def report_text(reports: Mapping[str, PRReport]) -> str:
    parts = [reports[name].to_text(f"{name}.") for name in reports]
    done = [r.auc_pr for n, r in reports.items() if n != "all" and not math.isnan(r.auc_pr)]
    if done:
        parts.append(f"category_mean.auc_pr = {statistics.fmean(done):.6f}\n")
    return "".join(parts)


def pr_curve_tsv(report: PRReport) -> str:
    lines = ["threshold\tprecision\trecall"]
    lines += [f"{t:.6f}\t{p:.6f}\t{r:.6f}" for t, p, r in report.pr_curve]
    return "\n".join(lines) + "\n"


def aggregate(values: Mapping[str, Sequence[float]]) -> dict[str, tuple[float, float]]:
    """Mean and sample standard deviation per key (std 0 for a single value)."""
    out = {}
    for key, vals in values.items():
        vals = [v for v in vals if not math.isnan(v)]
        if not vals:
            out[key] = (float("nan"), float("nan"))
            continue
        out[key] = (statistics.fmean(vals), statistics.stdev(vals) if len(vals) > 1 else 0.0)
    return out
