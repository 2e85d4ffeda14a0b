"""Command-line interface: generate, ingest, link, evaluate, sweep.

Exit codes: 0 success, 1 runtime failure, 2 configuration or validation error.
"""

from __future__ import annotations

import itertools
import logging
import sys
from pathlib import Path

import click

from .config import PipelineConfig, load_config
from .evaluation import GoldLinkSet, aggregate, evaluate_by_category, pr_curve_tsv, report_text, CATEGORIES
from .graph import build_graph
from .ingest import RecordStore, SchemaError
from .linker import STAGES, ingest_config, pairwise_certificate_scores, run_pipeline
from .matches import CertificateMatchSet
from .pairwise import LinkSet
from .synth import generate
from .validation import ConfigError, IntegrityError

log = logging.getLogger("poplink")

# the four experimental toggles, each with its two settings
SWEEP_OPTIONS = {
    "missing_values": ("exclude_attribute", "include_as_zero"),
    "weighting": ("uniform", "trained"),
    "census_decade_limit": (False, True),
    "constraints": (False, True),
}

MATCH_FILES = {
    "fused": "matches_fused.tsv",
    "relational": "matches_relational.tsv",
    "group": "matches_group.tsv",
}


class _Fail(click.ClickException):
    def __init__(self, message, code):
        super().__init__(message)
        self.exit_code = code


def _config(path, data_dir=None, workers=None) -> PipelineConfig:
    try:
        config = load_config(path)
        if data_dir is not None:
            config.base_dir = Path(data_dir)
            config.data = {k: Path(data_dir) / v for k, v in (config.raw.get("data") or {}).items() if v}
        if workers is not None:
            if workers < 1:
                raise ConfigError(f"--workers must be at least 1, got {workers}")
            config.workers = workers
        return config
    except (ConfigError, SchemaError) as exc:
        raise _Fail(f"config error: {exc}", 2) from None


def _guard(func, *args, **kwargs):
    try:
        return func(*args, **kwargs)
    except (ConfigError, SchemaError) as exc:
        raise _Fail(f"config error: {exc}", 2) from None
    except (IntegrityError, OSError, ValueError, KeyError) as exc:
        raise _Fail(f"{type(exc).__name__}: {exc}", 1) from None


config_option = click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                             help="YAML config; merged over the built-in defaults.")
data_option = click.option("--data-dir", type=click.Path(file_okay=False), default=None,
                           help="Directory the data paths are relative to (default: the config's directory).")
workers_option = click.option("--workers", type=int, default=None, help="Worker processes (output does not depend on it).")


@click.group()
@click.option("-v", "--verbose", count=True, help="Log progress (-vv for debug).")
def main(verbose):
    """Link historical certificates into life segments."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")


@main.command("generate")
@config_option
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=None, help="Override synth.seed.")
@click.option("--initial-population", type=int, default=None, help="Override synth.initial_population.")
@click.option("--clean", is_flag=True, help="Generate without any corruption.")
def cmd_generate(config_path, out_dir, seed, initial_population, clean):
    """Write a synthetic certificate corpus with gold links."""
    config = _config(config_path)
    if config.synth is None:
        raise _Fail("config error: no synth section with population parameters", 2)
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if initial_population is not None:
        overrides["initial_population"] = initial_population
    if clean:
        overrides["corruption"] = {"typo": 0.0, "variant": 0.0, "missing": 0.0, "year_error": 0.0, "event_year_error": 0.0}
    if overrides:
        config = _guard(config.with_overrides, {"synth": overrides})
    data = _guard(generate, config.synth)
    paths = _guard(data.write, out_dir)
    click.echo(f"certificates\t{len(data.certificates)}")
    click.echo(f"records\t{data.record_count()}")
    click.echo(f"gold_links\t{len(data.gold_links())}")
    for key in sorted(paths):
        click.echo(f"{key}\t{paths[key]}")


@main.command("ingest")
@config_option
@data_option
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def cmd_ingest(config_path, data_dir, out_dir):
    """Clean and standardise the certificate files into store.tsv."""
    config = _config(config_path, data_dir)
    store, report = _guard(ingest_config, config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    store.write_tsv(out / "store.tsv")
    (out / "ingest_report.txt").write_text(report.to_text(), encoding="utf-8")
    click.echo(report.to_text(), nl=False)


@main.command("link")
@config_option
@data_option
@workers_option
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--resume", is_flag=True, help="Reuse stage files whose inputs and settings are unchanged.")
@click.option("--stop-after", type=click.Choice(STAGES), default="segments",
              help="Last stage to run; 'pairwise' gives pair-wise linkage only.")
@click.option("--dump-candidates", is_flag=True, help="Also write candidates.tsv.")
@click.option("--dump-graph", is_flag=True, help="Also write graph.tsv.")
def cmd_link(config_path, data_dir, workers, out_dir, resume, stop_after, dump_candidates, dump_graph):
    """Run the linkage pipeline into a run directory."""
    config = _config(config_path, data_dir, workers)
    linker = _guard(
        run_pipeline, config, out_dir, resume=resume, stop_after=stop_after,
        dump_candidates=dump_candidates, dump_graph=dump_graph,
    )
    for stage, seconds in linker.timings_.items():
        click.echo(f"{stage}\t{seconds:.2f}s")


def evaluate_run(run: Path, gold: GoldLinkSet, config: PipelineConfig, which: str = "fused"):
    store = RecordStore.read_tsv(run / "store.tsv", config.vocabulary)
    if which == "pairwise":
        scores = pairwise_certificate_scores(build_graph(LinkSet.read_tsv(run / "linkset.tsv", config.s_m), store))
    else:
        scores = CertificateMatchSet.read_tsv(run / MATCH_FILES[which]).certificate_pairs()
    return evaluate_by_category(scores, gold, store)


def _gold(path) -> GoldLinkSet:
    if path is None or not Path(path).exists():
        raise _Fail(f"config error: gold file {path} not found", 2)
    try:
        return GoldLinkSet.read_tsv(path)
    except ValueError as exc:
        raise _Fail(f"config error: {exc}", 2) from None


@main.command("evaluate")
@config_option
@click.option("--run", "run_dir", required=True, type=click.Path(file_okay=False, exists=True))
@click.option("--gold", "gold_path", type=click.Path(dir_okay=False), default=None,
              help="Gold links TSV (default: the config's data.gold).")
@click.option("--matches", "which", type=click.Choice(["fused", "relational", "group", "pairwise"]), default="fused")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Report directory (default: the run).")
def cmd_evaluate(config_path, run_dir, gold_path, which, out_dir):
    """Score a run against gold links, overall and per certificate-type pair."""
    config = _config(config_path)
    gold = _gold(gold_path or config.data.get("gold"))
    run = Path(run_dir)
    reports = _guard(evaluate_run, run, gold, config, which)
    out = Path(out_dir) if out_dir else run
    out.mkdir(parents=True, exist_ok=True)
    text = report_text(reports)
    (out / f"report_{which}.txt").write_text(text, encoding="utf-8")
    (out / f"pr_curve_{which}.tsv").write_text(pr_curve_tsv(reports["all"]), encoding="utf-8")
    click.echo(text, nl=False)


def sweep_settings():
    """The 16 combinations of the four toggles, as (label, config override)."""
    names = list(SWEEP_OPTIONS)
    for values in itertools.product(*(SWEEP_OPTIONS[n] for n in names)):
        setting = dict(zip(names, values))
        override = {
            "pairwise": {"missing_values": setting["missing_values"], "weighting": setting["weighting"]},
            "blocking": {"census_decade_limit": setting["census_decade_limit"]},
            "link_constraints": {"enabled": setting["constraints"]},
        }
        label = "_".join(f"{n}={v}" for n, v in setting.items())
        yield label, setting, override


def summarize_sweep(rows: list[tuple[dict, dict[str, float]]]) -> str:
    """Mean and std of each metric per toggle setting, over the runs with that setting."""
    metrics = list(rows[0][1]) if rows else []
    lines = ["option\tvalue\tmetric\tmean\tstd\truns"]
    for option, values in SWEEP_OPTIONS.items():
        for value in values:
            subset = [m for s, m in rows if s[option] == value]
            stats = aggregate({k: [m[k] for m in subset] for k in metrics})
            for k in metrics:
                mean, std = stats[k]
                lines.append(f"{option}\t{value}\t{k}\t{mean:.6f}\t{std:.6f}\t{len(subset)}")
    return "\n".join(lines) + "\n"


@main.command("sweep")
@config_option
@data_option
@workers_option
@click.option("--gold", "gold_path", type=click.Path(dir_okay=False), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--resume", is_flag=True, help="Reuse finished stages of earlier sweep runs.")
def cmd_sweep(config_path, data_dir, workers, gold_path, out_dir, resume):
    """Run all 16 option combinations and report mean and std per option."""
    base = _config(config_path, data_dir, workers)
    gold = _gold(gold_path or base.data.get("gold"))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    per_run = ["run\t" + "\t".join(SWEEP_OPTIONS) + "\tmetric\tauc_pr"]
    for i, (label, setting, override) in enumerate(sweep_settings()):
        config = _guard(base.with_overrides, override)
        config.data, config.workers = base.data, base.workers
        run = out / f"run{i:02d}"
        _guard(run_pipeline, config, run, resume=resume)
        metrics = {}
        for which in ("pairwise", "fused"):
            reports = _guard(evaluate_run, run, gold, config, which)
            for name in ("all",) + CATEGORIES:
                metrics[f"{which}.{name}"] = reports[name].auc_pr
        rows.append((setting, metrics))
        for k, v in metrics.items():
            per_run.append(f"run{i:02d}\t" + "\t".join(str(setting[n]) for n in SWEEP_OPTIONS) + f"\t{k}\t{v:.6f}")
        click.echo(f"run{i:02d}\t{label}\tfused.all={metrics['fused.all']:.4f}")
    (out / "sweep_runs.tsv").write_text("\n".join(per_run) + "\n", encoding="utf-8")
    summary = summarize_sweep(rows)
    (out / "sweep_summary.tsv").write_text(summary, encoding="utf-8")
    click.echo(summary, nl=False)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
