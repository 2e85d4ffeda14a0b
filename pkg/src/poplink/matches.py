"""Certificate-level match sets M_R, M_G and M_F and their TSV form."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Mapping

SCORE_DECIMALS = 6

Key = tuple[str, str, str]


class CertificateMatchSet:
    """Scores keyed by (left certificate, right certificate, linkage type).

    Scores are rounded to the serialized precision on construction so a
    match set read back from disk compares equal to the original.
    """

    def __init__(self, entries: Mapping[Key, float] | Iterable[tuple[Key, float]] = (), method: str = ""):
        items = entries.items() if isinstance(entries, Mapping) else entries
        clean = {}
        for key, score in items:
            score = round(float(score), SCORE_DECIMALS)
            if not 0.0 <= score <= 1.0:
                raise ValueError(f"match score {score} for {key} outside [0, 1]")
            clean[tuple(key)] = score
        self.entries: dict[Key, float] = dict(sorted(clean.items()))
        self.method = method

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __contains__(self, key) -> bool:
        return tuple(key) in self.entries

    def __eq__(self, other) -> bool:
        return isinstance(other, CertificateMatchSet) and self.entries == other.entries

    def __getitem__(self, key: Key) -> float:
        return self.entries[tuple(key)]

    def items(self):
        return self.entries.items()

    def keys(self):
        return self.entries.keys()

    def link_types(self) -> list[str]:
        return sorted({lt for _, _, lt in self.entries})

    def by_link_type(self) -> dict[str, dict[tuple[str, str], float]]:
        out: dict[str, dict[tuple[str, str], float]] = {}
        for (c1, c2, lt), s in self.entries.items():
            out.setdefault(lt, {})[(c1, c2)] = s
        return out

    def certificate_pairs(self) -> dict[tuple[str, str], float]:
        """Project onto unordered certificate pairs, keeping each pair's best score."""
        out: dict[tuple[str, str], float] = {}
        for (c1, c2, _), s in self.entries.items():
            key = (c1, c2) if c1 < c2 else (c2, c1)
            if s > out.get(key, -1.0):
                out[key] = s
        return dict(sorted(out.items()))

    def to_tsv(self) -> str:
        lines = ["cert_id_1\tcert_id_2\tlinkage_type\tmethod\tscore"]
        lines += [f"{c1}\t{c2}\t{lt}\t{self.method}\t{s:.{SCORE_DECIMALS}f}" for (c1, c2, lt), s in self.entries.items()]
        return "\n".join(lines) + "\n"

    def write_tsv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_tsv(), encoding="utf-8")

    @classmethod
    def read_tsv(cls, path: str | Path) -> "CertificateMatchSet":
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle, delimiter="\t")
            next(reader)
            rows = list(reader)
        method = rows[0][3] if rows else ""
        return cls({(c1, c2, lt): float(s) for c1, c2, lt, _, s in rows}, method)
