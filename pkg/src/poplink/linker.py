"""End-to-end pipeline: ingest, pair-wise linkage, certificate matching, fusion, segments."""

from __future__ import annotations

import hashlib
import json
import logging
import time
from pathlib import Path
from typing import Optional

from sklearn.base import BaseEstimator

from .blocking import write_candidates
from .config import PipelineConfig, load_config
from .fusion import ResultFusion, assemble_life_segments, segments_to_tsv
from .graph import build_graph
from .group import GroupLinker
from .ingest import IngestReport, MappingSchema, RecordStore, ingest_files
from .matches import CertificateMatchSet
from .model import CertificateType
from .pairwise import LinkSet, PairwiseLinker
from .relational import RelationalLinker
from .validation import ConfigError, check_is_fitted

log = logging.getLogger(__name__)

STAGES = ("ingest", "pairwise", "relational", "group", "fuse", "segments")

ARTIFACTS = {
    "ingest": ("store.tsv", "ingest_report.txt"),
    "pairwise": ("linkset.tsv",),
    "relational": ("matches_relational.tsv",),
    "group": ("matches_group.tsv",),
    "fuse": ("matches_fused.tsv",),
    "segments": ("segments.tsv",),
}

# config sections each stage reads, upstream sections included
_SECTIONS = {
    "ingest": ("data", "roles", "drop_roles", "newborn_roles", "role_properties"),
    "pairwise": ("role_pairs", "temporal", "blocking", "comparators", "pairwise", "seed"),
    "relational": ("link_constraints", "relational_neighbors", "relational"),
    "group": ("link_constraints", "relational_neighbors", "group"),
    "fuse": ("fusion",),
    "segments": (),
}
_UPSTREAM = {
    "ingest": (),
    "pairwise": ("ingest",),
    "relational": ("pairwise",),
    "group": ("pairwise",),
    "fuse": ("relational", "group"),
    "segments": ("fuse",),
}

FINGERPRINT_FILE = "stages.json"


def check_stage(name: str) -> str:
    if name not in STAGES:
        raise ConfigError(f"unknown stage {name!r}; expected one of {', '.join(STAGES)}")
    return name


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]


def stage_fingerprints(config: PipelineConfig, input_digest: str = "") -> dict[str, str]:
    """Hash of everything a stage's output depends on; worker count is excluded."""
    out: dict[str, str] = {}
    for stage in STAGES:
        own = {k: config.raw.get(k) for k in _SECTIONS[stage]}
        if stage == "ingest":
            own["inputs"] = input_digest
        out[stage] = _digest([own, [out[u] for u in _UPSTREAM[stage]]])
    return out


def input_digest(config: PipelineConfig) -> str:
    h = hashlib.sha256()
    for cert_type in CertificateType:
        path = config.data.get(cert_type.value.lower())
        if path is not None and path.exists():
            h.update(cert_type.value.encode())
            h.update(path.read_bytes())
    return h.hexdigest()[:16]


def ingest_config(config: PipelineConfig) -> tuple[RecordStore, IngestReport]:
    paths = {}
    for cert_type in CertificateType:
        path = config.data.get(cert_type.value.lower())
        if path is None:
            continue
        if not path.exists():
            raise FileNotFoundError(f"{cert_type.value} file {path} does not exist")
        paths[cert_type] = path
    if not paths:
        raise ConfigError("config names no certificate files under data")
    return ingest_files(
        paths,
        MappingSchema(),
        config.vocabulary,
        drop_roles=config.drop_roles,
        role_genders=config.role_genders,
        newborn_roles=config.newborn_roles,
    )


class PopulationLinker(BaseEstimator):
    """The whole linkage pipeline as one estimator.

    ``fit(store)`` runs every stage up to ``stop_after`` and leaves the
    intermediate results on the instance (``link_set_``, ``graph_``,
    ``relational_matches_``, ``group_matches_``, ``matches_``, ``segments_``).
    """

    def __init__(self, config: Optional[PipelineConfig] = None, workers: Optional[int] = None, stop_after: str = "segments"):
        self.config = config
        self.workers = workers
        self.stop_after = stop_after

    @classmethod
    def from_config(cls, path=None, **kwargs) -> "PopulationLinker":
        return cls(load_config(path), **kwargs)

    def _workers(self) -> int:
        return self.workers or self.config.workers

    def pairwise_linker(self) -> PairwiseLinker:
        c = self.config
        return PairwiseLinker(
            comparators=c.comparators,
            blocking_keys=c.blocking_keys,
            role_pairs=c.role_pairs,
            temporal=c.temporal,
            s_m=c.s_m,
            missing_values=c.missing_values,
            weighting=c.weighting,
            train_sample_size=c.train_sample_size,
            census_decade_limit=c.census_decade_limit,
            max_block_size=c.max_block_size,
            random_state=c.seed,
            workers=self._workers(),
        )

    def _constraints(self):
        return self.config.link_constraints if self.config.constraints_enabled else None

    def relational_linker(self) -> RelationalLinker:
        return RelationalLinker(
            self.config.relational_method, self.config.linkage_types, self._constraints(),
            self.config.assignment_mode, self._workers(),
        )

    def group_linker(self) -> GroupLinker:
        return GroupLinker(
            self.config.group_method, self.config.linkage_types, self._constraints(),
            self.config.assignment_mode, self._workers(),
        )

    def fit(self, store: RecordStore, y=None, cache: Optional[dict] = None):
        """Run the stages; ``cache`` may hold precomputed stage outputs by stage name."""
        if self.config is None:
            self.config = load_config()
        check_stage(self.stop_after)
        cache = cache or {}
        last = STAGES.index(self.stop_after)
        self.timings_: dict[str, float] = {}
        self.store_ = store

        def run(stage, func):
            if stage in cache:
                self.timings_[stage] = 0.0
                return cache[stage]
            start = time.perf_counter()
            result = func()
            self.timings_[stage] = time.perf_counter() - start
            log.info("stage %s done in %.1fs", stage, self.timings_[stage])
            return result

        def pairwise():
            linker = self.pairwise_linker().fit(store)
            links = linker.transform(store)
            self.n_candidates_ = linker.n_candidates_
            return links

        self.link_set_ = run("pairwise", pairwise)
        self.graph_ = cache["graph"] if "graph" in cache else build_graph(self.link_set_, store)
        if last <= STAGES.index("pairwise"):
            return self
        rel = self.relational_linker().fit()
        self.relational_matches_ = run("relational", lambda: rel.predict(self.graph_))
        if last <= STAGES.index("relational"):
            return self
        grp = self.group_linker().fit()
        self.group_matches_ = run("group", lambda: grp.predict(self.graph_))
        if last <= STAGES.index("group"):
            return self
        f = self.config.fusion
        fusion = ResultFusion(f.w_R, f.w_G, f.s_t).fit()
        self.matches_ = run("fuse", lambda: fusion.predict(self.relational_matches_, self.group_matches_))
        if last <= STAGES.index("fuse"):
            return self
        self.segments_ = run(
            "segments",
            lambda: assemble_life_segments(
                self.matches_, store, self.config.linkage_types, self.config.role_pairs,
                self.config.temporal, self.link_set_,
            ),
        )
        return self

    def predict(self, store: RecordStore):
        """Life segments for ``store``."""
        self.stop_after = "segments"
        return self.fit(store).segments_

    def pairwise_scores(self) -> dict[tuple[str, str], float]:
        """Certificate-pair scores from pair-wise linkage alone (strongest record link)."""
        check_is_fitted(self, "graph_")
        return pairwise_certificate_scores(self.graph_)


def pairwise_certificate_scores(graph) -> dict[tuple[str, str], float]:
    out = {}
    for c1, c2 in graph.edges:
        out[(c1, c2) if c1 < c2 else (c2, c1)] = graph.summary(c1, c2).maximum
    return out


def run_pipeline(
    config: PipelineConfig,
    out_dir: str | Path,
    *,
    resume: bool = False,
    stop_after: str = "segments",
    workers: Optional[int] = None,
    dump_candidates: bool = False,
    dump_graph: bool = False,
) -> PopulationLinker:
    """Run the pipeline into ``out_dir``, writing each stage's artifacts as it finishes.

    With ``resume``, a stage whose artifacts exist and whose fingerprint
    matches the current config and inputs is loaded instead of recomputed.
    Artifacts of finished stages stay on disk if a later stage fails.
    """
    check_stage(stop_after)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    prints = stage_fingerprints(config, input_digest(config))
    fp_path = out / FINGERPRINT_FILE
    recorded = json.loads(fp_path.read_text()) if resume and fp_path.exists() else {}
    if not resume:
        for names in ARTIFACTS.values():
            for name in names:
                (out / name).unlink(missing_ok=True)
        fp_path.unlink(missing_ok=True)
        recorded = {}

    def reusable(stage):
        return (
            resume
            and recorded.get(stage) == prints[stage]
            and all((out / n).exists() for n in ARTIFACTS[stage])
        )

    def mark(stage):
        recorded[stage] = prints[stage]
        fp_path.write_text(json.dumps(recorded, indent=1, sort_keys=True) + "\n")

    timings: dict[str, float] = {}
    if reusable("ingest"):
        store = RecordStore.read_tsv(out / "store.tsv", config.vocabulary)
        timings["ingest"] = 0.0
        log.info("stage ingest loaded from %s", out)
    else:
        start = time.perf_counter()
        store, report = ingest_config(config)
        timings["ingest"] = time.perf_counter() - start
        store.write_tsv(out / "store.tsv")
        (out / "ingest_report.txt").write_text(report.to_text(), encoding="utf-8")
        mark("ingest")

    cache: dict[str, object] = {}
    if reusable("pairwise"):
        cache["pairwise"] = LinkSet.read_tsv(out / "linkset.tsv", config.s_m)
    for stage, name in (("relational", "matches_relational.tsv"), ("group", "matches_group.tsv"), ("fuse", "matches_fused.tsv")):
        if reusable(stage):
            cache[stage] = CertificateMatchSet.read_tsv(out / name)

    linker = PopulationLinker(config, workers=workers, stop_after="pairwise")
    writers = {
        "pairwise": lambda: linker.link_set_.write_tsv(out / "linkset.tsv"),
        "relational": lambda: linker.relational_matches_.write_tsv(out / "matches_relational.tsv"),
        "group": lambda: linker.group_matches_.write_tsv(out / "matches_group.tsv"),
        "fuse": lambda: linker.matches_.write_tsv(out / "matches_fused.tsv"),
        "segments": lambda: (out / "segments.tsv").write_text(segments_to_tsv(linker.segments_), encoding="utf-8"),
    }
    # one stage at a time so finished artifacts reach disk before the next stage runs
    for stage in STAGES[1:STAGES.index(stop_after) + 1]:
        linker.stop_after = stage
        if stage == "segments" and reusable("segments"):
            timings["segments"] = 0.0
            break
        loaded = stage in cache
        linker.fit(store, cache=cache)
        cache["graph"] = linker.graph_
        cache[stage] = {
            "pairwise": lambda: linker.link_set_,
            "relational": lambda: linker.relational_matches_,
            "group": lambda: linker.group_matches_,
            "fuse": lambda: linker.matches_,
            "segments": lambda: linker.segments_,
        }[stage]()
        timings[stage] = linker.timings_[stage]
        if not loaded:
            writers[stage]()
            mark(stage)
        if stage == "pairwise":
            if dump_candidates:
                write_candidates(linker.pairwise_linker().candidates(store), out / "candidates.tsv")
            if dump_graph:
                linker.graph_.write_tsv(out / "graph.tsv")

    linker.timings_ = timings
    (out / "timing.txt").write_text(
        "".join(f"{stage}\t{timings[stage]:.3f}\n" for stage in STAGES if stage in timings), encoding="utf-8"
    )
    return linker
