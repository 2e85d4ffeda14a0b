import dataclasses
import json

import pytest

from poplink.linker import (
    STAGES,
    PopulationLinker,
    check_stage,
    ingest_config,
    input_digest,
    run_pipeline,
    stage_fingerprints,
)
from poplink.synth import generate
from poplink.validation import ConfigError, NotFittedError

OUTPUTS = ("store.tsv", "linkset.tsv", "matches_relational.tsv", "matches_group.tsv", "matches_fused.tsv", "segments.tsv")


@pytest.fixture(scope="module")
def small(config, tmp_path_factory):
    data_dir = tmp_path_factory.mktemp("corpus")
    generate(dataclasses.replace(config.synth, initial_population=150)).write(data_dir)
    cfg = config.with_overrides({})
    cfg.data = {k: data_dir / v for k, v in config.raw["data"].items()}
    return cfg


@pytest.fixture(scope="module")
def reference(small, tmp_path_factory):
    run = tmp_path_factory.mktemp("ref")
    run_pipeline(small, run)
    return run


def read_outputs(run):
    return {name: (run / name).read_bytes() for name in OUTPUTS}


def test_all_artifacts_written(reference):
    for name in OUTPUTS + ("timing.txt", "stages.json", "ingest_report.txt"):
        assert (reference / name).exists()
    stages = [line.split("\t")[0] for line in (reference / "timing.txt").read_text().splitlines()]
    assert stages == list(STAGES)


def test_rerun_is_byte_identical(small, reference, tmp_path):
    run_pipeline(small, tmp_path)
    assert read_outputs(tmp_path) == read_outputs(reference)


def test_worker_count_does_not_change_output(small, reference, tmp_path):
    run_pipeline(small, tmp_path, workers=2)
    assert read_outputs(tmp_path) == read_outputs(reference)


def test_resume_reuses_and_matches_fresh(small, reference, tmp_path):
    run_pipeline(small, tmp_path, stop_after="relational")
    assert not (tmp_path / "matches_group.tsv").exists()
    linker = run_pipeline(small, tmp_path, resume=True)
    assert linker.timings_["ingest"] == 0.0 and linker.timings_["relational"] == 0.0
    assert read_outputs(tmp_path) == read_outputs(reference)


def test_resume_recomputes_changed_stage(small, reference, tmp_path):
    run_pipeline(small, tmp_path)
    before = json.loads((tmp_path / "stages.json").read_text())
    changed = small.with_overrides({"fusion": {"s_t": 0.6}})
    changed.data = small.data
    linker = run_pipeline(changed, tmp_path, resume=True)
    after = json.loads((tmp_path / "stages.json").read_text())
    assert before["group"] == after["group"] and before["fuse"] != after["fuse"]
    assert linker.timings_["group"] == 0.0
    assert (tmp_path / "matches_group.tsv").read_bytes() == (reference / "matches_group.tsv").read_bytes()
    assert (tmp_path / "matches_fused.tsv").read_bytes() != (reference / "matches_fused.tsv").read_bytes()


def test_fingerprints_ignore_workers_but_track_inputs(small):
    digest = input_digest(small)
    base = stage_fingerprints(small, digest)
    more = small.with_overrides({"workers": 4})
    assert stage_fingerprints(more, digest) == base
    assert stage_fingerprints(small, "other")["segments"] != base["segments"]
    pw = small.with_overrides({"pairwise": {"s_m": 0.5}})
    prints = stage_fingerprints(pw, digest)
    assert prints["ingest"] == base["ingest"] and prints["pairwise"] != base["pairwise"]
    assert prints["fuse"] != base["fuse"]


def test_estimator_stop_after_and_not_fitted(small):
    store, _ = ingest_config(small)
    linker = PopulationLinker(small, stop_after="pairwise")
    with pytest.raises(NotFittedError):
        linker.pairwise_scores()
    linker.fit(store)
    assert not hasattr(linker, "matches_")
    scores = linker.pairwise_scores()
    assert scores and all(0.0 <= v <= 1.0 and a < b for (a, b), v in scores.items())
    segments = PopulationLinker(small).predict(store)
    assert sorted(r for s in segments for r in s.record_ids) == sorted(store.records)


def test_sklearn_params(small):
    linker = PopulationLinker(small, workers=2)
    assert linker.get_params()["workers"] == 2
    assert linker.set_params(stop_after="group").stop_after == "group"


def test_unknown_stage_and_missing_data(small, tmp_path):
    with pytest.raises(ConfigError):
        check_stage("teleport")
    broken = small.with_overrides({})
    broken.data = {"birth": tmp_path / "none.csv"}
    with pytest.raises(FileNotFoundError):
        ingest_config(broken)
    broken.data = {}
    with pytest.raises(ConfigError):
        ingest_config(broken)
