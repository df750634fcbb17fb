"""Command-line pipeline orchestration.

Subcommands map one-to-one onto pipeline operations: reduce-fsd50k,
fetch-metadata, download, label, curate, inject-noise, mix, evaluate,
serve.  Every run writes a JSON report with the seed, tau, input digests
and counts needed to reproduce it.  Exit codes: 0 success, 1 operation
error, 2 configuration error; errors print a machine-readable JSON line
on stderr.
"""

from __future__ import annotations

import json
import os
import sys
import time
from pathlib import Path
from typing import Optional

import click

from . import __version__
from .annotation import AnnotationService, AnnotationStore, create_app
from .config import ConfigError, RunConfig, load_config, write_report
from .curation import (
    curate_noisy,
    emit_manifest,
    load_fsd50k_ground_truth,
    manifest_from_ground_truth,
    pair_manifests,
    parse_manifest,
    reduce_to_single_label,
    with_name,
)
from .freesound import Converter, FreesoundClient, MetadataCache
from .noise import NoiseSpec, inject_synthetic, mix_substitution
from .ontology import LabelSet, parse_ontology
from .retrieval import (
    Labeller,
    build_queries,
    build_vocabulary,
    evaluate_labels,
    read_scored_csv,
    write_scored_csv,
)
from .text import LemmaLexicon, bundled_stop_words, load_stop_words


def _fail(category: str, message: str, code: int) -> None:
    click.echo(json.dumps({"error": message, "category": category}), err=True)
    sys.exit(code)


def _load_config(config_path: Optional[str], **overrides) -> RunConfig:
    try:
        return load_config(config_path, overrides)
    except ConfigError as exc:
        _fail("config", str(exc), 2)
        raise AssertionError("unreachable")


def _manifest_at(path: str):
    p = Path(path)
    return parse_manifest(p.parent, p.stem)


def _lexicon(cfg: RunConfig) -> LemmaLexicon:
    return LemmaLexicon.load(cfg.lexicon) if cfg.lexicon else LemmaLexicon.bundled()


def _stop_words(cfg: RunConfig):
    return load_stop_words(cfg.stop_words) if cfg.stop_words else bundled_stop_words()


def _provenance(cfg: RunConfig, source: str) -> dict:
    return {
        "seed": cfg.seed,
        "tau": cfg.tau,
        "source": source,
        "tool_version": __version__,
    }


config_option = click.option(
    "--config", "config_path", type=click.Path(), default=None, help="JSON config file."
)


@click.group()
@click.version_option(__version__)
def main():
    """Retrieve, label, curate, and stress-test audio-clip datasets."""


@main.command("reduce-fsd50k")
@config_option
@click.option("--ontology", "ontology_path", type=click.Path(), default=None)
@click.option("--ground-truth-dev", type=click.Path(), default=None)
@click.option("--ground-truth-eval", type=click.Path(), default=None)
@click.option("--output-dir", type=click.Path(), default=None)
@click.option("--min-train", type=int, default=None, help="Per-class training minimum.")
@click.option("--min-val", type=int, default=None)
@click.option("--min-test", type=int, default=None)
@click.option("--name", default="clean", show_default=True)
def reduce_fsd50k(
    config_path, ontology_path, ground_truth_dev, ground_truth_eval,
    output_dir, min_train, min_val, min_test, name,
):
    """Reduce multi-label ground truth to the single-label clean dataset."""
    started = time.monotonic()
    cfg = _load_config(
        config_path,
        ontology=ontology_path,
        ground_truth_dev=ground_truth_dev,
        ground_truth_eval=ground_truth_eval,
        output_dir=output_dir,
    )
    overrides = {"train": min_train, "val": min_val, "test": min_test}
    for split, value in overrides.items():
        if value is not None:
            cfg.min_counts[split] = value
    try:
        cfg.require("ontology", "ground_truth_dev", "ground_truth_eval")
    except ConfigError as exc:
        _fail("config", str(exc), 2)
    try:
        ontology = parse_ontology(Path(cfg.ontology))
        ground_truth = load_fsd50k_ground_truth(cfg.ground_truth_dev, cfg.ground_truth_eval)
        label_set, entries = reduce_to_single_label(ground_truth, ontology, cfg.min_counts)
        manifest = manifest_from_ground_truth(
            entries, ontology, name, _provenance(cfg, "ground-truth reduction")
        )
        Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)
        label_set.write(Path(cfg.output_dir) / "labels.txt")
        emit_manifest(manifest, cfg.output_dir)
        counts = {
            "classes": len(label_set),
            "entries": len(entries),
            **{
                f"entries_{split}": sum(1 for e in entries if e.split == split)
                for split in ("train", "val", "test")
            },
        }
        write_report(
            cfg.output_dir, "reduce-fsd50k", cfg,
            {
                "ontology": cfg.ontology,
                "ground_truth_dev": cfg.ground_truth_dev,
                "ground_truth_eval": cfg.ground_truth_eval,
            },
            counts, [], (time.monotonic() - started) * 1000,
        )
        click.echo(f"{len(label_set)} classes, {len(entries)} entries -> {cfg.output_dir}")
    except Exception as exc:
        _fail("operation", str(exc), 1)


@main.command("fetch-metadata")
@config_option
@click.option("--cache", "cache_path", type=click.Path(), default=None)
@click.option("--page-size", type=int, default=None)
@click.option("--rate-per-sec", type=float, default=None)
@click.option("--output-dir", type=click.Path(), default=None)
def fetch_metadata(config_path, cache_path, page_size, rate_per_sec, output_dir):
    """Crawl clip metadata within the duration window into the cache."""
    started = time.monotonic()
    cfg = _load_config(
        config_path, cache=cache_path, page_size=page_size,
        rate_per_sec=rate_per_sec, output_dir=output_dir,
    )
    if cfg.cache is None:
        _fail("config", "cache: required but not set", 2)
    api_key = os.environ.get(cfg.credentials_env, "")
    if not api_key:
        _fail("config", f"credentials_env: environment variable {cfg.credentials_env} is empty", 2)
    try:
        cache = MetadataCache(cfg.cache)
        client = FreesoundClient(api_key, rate_per_sec=cfg.rate_per_sec)
        fetched = sum(1 for _ in client.fetch_metadata(cache, page_size=cfg.page_size))
        write_report(
            cfg.output_dir, "fetch-metadata", cfg, {"cache": cfg.cache},
            {"fetched": fetched, "cached_total": len(cache)},
            [], (time.monotonic() - started) * 1000,
        )
        click.echo(f"fetched {fetched} records, cache holds {len(cache)}")
    except Exception as exc:
        _fail("operation", str(exc), 1)


@main.command("download")
@config_option
@click.option("--cache", "cache_path", type=click.Path(), default=None)
@click.option("--manifest", "manifest_path", type=click.Path(), required=True)
@click.option("--audio-dir", type=click.Path(), default=None)
@click.option("--concurrency", type=int, default=4, show_default=True)
@click.option("--output-dir", type=click.Path(), default=None)
def download(config_path, cache_path, manifest_path, audio_dir, concurrency, output_dir):
    """Download and convert the audio for every clip in a manifest."""
    started = time.monotonic()
    cfg = _load_config(
        config_path, cache=cache_path, audio_dir=audio_dir, output_dir=output_dir
    )
    try:
        cfg.require("cache", "audio_dir")
    except ConfigError as exc:
        _fail("config", str(exc), 2)
    api_key = os.environ.get(cfg.credentials_env, "")
    if not api_key:
        _fail("config", f"credentials_env: environment variable {cfg.credentials_env} is empty", 2)
    try:
        cache = MetadataCache(cfg.cache)
        manifest = _manifest_at(manifest_path)
        client = FreesoundClient(api_key, rate_per_sec=cfg.rate_per_sec)
        results = client.download_many(
            sorted(manifest.clip_ids()), cache, cfg.audio_dir,
            Converter(cfg.converter), concurrency=concurrency,
        )
        ok = sum(1 for p in results.values() if p is not None)
        write_report(
            cfg.output_dir, "download", cfg,
            {"cache": cfg.cache, "manifest": manifest_path},
            {"requested": len(results), "downloaded": ok,
             "deleted": len(cache.deleted), "failed": len(cache.failed)},
            [], (time.monotonic() - started) * 1000,
        )
        click.echo(f"downloaded {ok}/{len(results)} clips")
    except Exception as exc:
        _fail("operation", str(exc), 1)


@main.command("label")
@config_option
@click.option("--cache", "cache_path", type=click.Path(), default=None)
@click.option("--ontology", "ontology_path", type=click.Path(), default=None)
@click.option("--labels", "labels_path", type=click.Path(), required=True,
              help="Label-set file, one ontology id per line.")
@click.option("--tau", type=float, default=None)
@click.option("--output-dir", type=click.Path(), default=None)
def label(config_path, cache_path, ontology_path, labels_path, tau, output_dir):
    """Score every cached clip and keep assignments at or above tau."""
    started = time.monotonic()
    cfg = _load_config(
        config_path, cache=cache_path, ontology=ontology_path,
        tau=tau, output_dir=output_dir,
    )
    try:
        cfg.require("cache", "ontology")
    except ConfigError as exc:
        _fail("config", str(exc), 2)
    try:
        ontology = parse_ontology(Path(cfg.ontology))
        label_set = LabelSet.read(labels_path)
        lexicon, stop_words = _lexicon(cfg), _stop_words(cfg)
        queries = build_queries(label_set, ontology, lexicon, stop_words)
        vocab = build_vocabulary(queries)
        labeller = Labeller(queries, vocab, lexicon, stop_words, tau=cfg.tau)
        cache = MetadataCache(cfg.cache)
        total = 0
        retained = []
        for record in cache:
            total += 1
            scored = labeller.assign(record)
            if scored is not None:
                retained.append(scored)
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_scored_csv(out / "scored.csv", retained)
        write_report(
            cfg.output_dir, "label", cfg,
            {"cache": cfg.cache, "ontology": cfg.ontology, "labels": labels_path},
            {"total_clips": total, "retained": len(retained),
             "discarded": total - len(retained)},
            [], (time.monotonic() - started) * 1000,
        )
        click.echo(f"retained {len(retained)}/{total} clips at tau={cfg.tau}")
    except Exception as exc:
        _fail("operation", str(exc), 1)


@main.command("curate")
@config_option
@click.option("--scored", "scored_path", type=click.Path(), required=True)
@click.option("--clean-manifest", "clean_path", type=click.Path(), required=True)
@click.option("--exclusion", "exclusion_path", type=click.Path(), default=None,
              help="Clip ids to exclude, one per line; defaults to the clean manifest's ids plus the ground-truth files when configured.")
@click.option("--seed", type=int, default=None)
@click.option("--name", default="noisy", show_default=True)
@click.option("--output-dir", type=click.Path(), default=None)
def curate(config_path, scored_path, clean_path, exclusion_path, seed, name, output_dir):
    """Match scored clips to the clean per-class counts; emit the pair."""
    started = time.monotonic()
    cfg = _load_config(config_path, seed=seed, output_dir=output_dir)
    try:
        scored = read_scored_csv(scored_path)
        clean = _manifest_at(clean_path)
        exclusion = set()
        if exclusion_path:
            exclusion = {
                line.strip()
                for line in Path(exclusion_path).read_text(encoding="utf-8").splitlines()
                if line.strip()
            }
        else:
            exclusion = clean.clip_ids()
            if cfg.ground_truth_dev and cfg.ground_truth_eval:
                ground_truth = load_fsd50k_ground_truth(
                    cfg.ground_truth_dev, cfg.ground_truth_eval
                )
                exclusion |= {e.clip_id for e in ground_truth}
        noisy = curate_noisy(
            scored, exclusion, clean.class_counts("train"), cfg.seed,
            clean.label_names(), name=name,
            provenance=_provenance(cfg, f"retrieval output {Path(scored_path).name}"),
        )
        dropped = list(noisy.provenance.get("dropped_classes", []))
        clean_paired, noisy_paired = pair_manifests(
            with_name(clean, f"{clean.name}-paired"), noisy, dropped
        )
        emit_manifest(clean_paired, cfg.output_dir)
        emit_manifest(noisy_paired, cfg.output_dir)
        write_report(
            cfg.output_dir, "curate", cfg,
            {"scored": scored_path, "clean_manifest": clean_path},
            {"candidates": len(scored), "noisy_entries": len(noisy_paired.entries),
             "clean_entries": len(clean_paired.entries),
             "classes": len(noisy_paired.class_counts("train"))},
            dropped, (time.monotonic() - started) * 1000,
        )
        click.echo(
            f"{len(noisy_paired.class_counts('train'))} classes paired, "
            f"{len(dropped)} dropped -> {cfg.output_dir}"
        )
    except ConfigError as exc:
        _fail("config", str(exc), 2)
    except Exception as exc:
        _fail("operation", str(exc), 1)


@main.command("inject-noise")
@config_option
@click.option("--manifest", "manifest_path", type=click.Path(), required=True)
@click.option("--noise-kind", type=click.Choice(["uniform", "conditional"]), default=None)
@click.option("--rho", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--geometric-p", type=float, default=None)
@click.option("--output-dir", type=click.Path(), default=None)
def inject_noise(config_path, manifest_path, noise_kind, rho, seed, geometric_p, output_dir):
    """Corrupt training labels with uniform or class-conditional noise."""
    started = time.monotonic()
    cfg = _load_config(config_path, output_dir=output_dir)
    base = cfg.noise.to_json_dict() if cfg.noise else {}
    for key, value in (
        ("kind", noise_kind), ("rho", rho), ("seed", seed), ("p_geometric", geometric_p)
    ):
        if value is not None:
            base[key] = value
    try:
        spec = NoiseSpec(**base)
    except (TypeError, ValueError) as exc:
        _fail("config", f"noise: {exc}", 2)
    try:
        manifest = _manifest_at(manifest_path)
        noised = inject_synthetic(manifest, spec)
        emit_manifest(noised, cfg.output_dir)
        write_report(
            cfg.output_dir, "inject-noise", cfg, {"manifest": manifest_path},
            {"entries": len(noised.entries),
             "changed": noised.provenance["noise"]["changed"]},
            [], (time.monotonic() - started) * 1000,
        )
        click.echo(f"changed {noised.provenance['noise']['changed']} labels -> {noised.name}")
    except Exception as exc:
        _fail("operation", str(exc), 1)


@main.command("mix")
@config_option
@click.option("--clean-manifest", "clean_path", type=click.Path(), required=True)
@click.option("--noisy-manifest", "noisy_path", type=click.Path(), required=True)
@click.option("--rho", type=float, required=True)
@click.option("--seed", type=int, default=None)
@click.option("--reference-noise-rate", type=float, default=0.464, show_default=True)
@click.option("--output-dir", type=click.Path(), default=None)
def mix(config_path, clean_path, noisy_path, rho, seed, reference_noise_rate, output_dir):
    """Substitute a proportion of clean training clips with noisy ones."""
    started = time.monotonic()
    cfg = _load_config(config_path, seed=seed, output_dir=output_dir)
    try:
        clean = _manifest_at(clean_path)
        noisy = _manifest_at(noisy_path)
        mixed = mix_substitution(clean, noisy, rho, cfg.seed, reference_noise_rate)
        emit_manifest(mixed, cfg.output_dir)
        write_report(
            cfg.output_dir, "mix", cfg,
            {"clean_manifest": clean_path, "noisy_manifest": noisy_path},
            {"entries": len(mixed.entries),
             "substituted": mixed.provenance["mix"]["substituted"]},
            [], (time.monotonic() - started) * 1000,
        )
        click.echo(
            f"substituted {mixed.provenance['mix']['substituted']} clips, "
            f"effective noise rate {mixed.provenance['mix']['effective_noise_rate']:.3f}"
        )
    except Exception as exc:
        _fail("operation", str(exc), 1)


@main.command("evaluate")
@config_option
@click.option("--cache", "cache_path", type=click.Path(), default=None)
@click.option("--ontology", "ontology_path", type=click.Path(), default=None)
@click.option("--clean-manifest", "clean_path", type=click.Path(), required=True,
              help="Ground-truth manifest whose labels are compared against.")
@click.option("--tau", type=float, default=None)
@click.option("--output-dir", type=click.Path(), default=None)
def evaluate(config_path, cache_path, ontology_path, clean_path, tau, output_dir):
    """Evaluate assigned labels against a ground-truth manifest."""
    started = time.monotonic()
    cfg = _load_config(
        config_path, cache=cache_path, ontology=ontology_path,
        tau=tau, output_dir=output_dir,
    )
    try:
        cfg.require("cache", "ontology")
    except ConfigError as exc:
        _fail("config", str(exc), 2)
    try:
        ontology = parse_ontology(Path(cfg.ontology))
        clean = _manifest_at(clean_path)
        ground_truth = {e.clip_id: e.label_id for e in clean.entries}
        label_set = LabelSet.from_ids(ground_truth.values())
        lexicon, stop_words = _lexicon(cfg), _stop_words(cfg)
        queries = build_queries(label_set, ontology, lexicon, stop_words)
        vocab = build_vocabulary(queries)
        labeller = Labeller(queries, vocab, lexicon, stop_words, tau=0.0)
        cache = MetadataCache(cfg.cache)
        assigned = [
            labeller.score(record) for record in cache if record.clip_id in ground_truth
        ]
        report = evaluate_labels(assigned, ground_truth, cfg.tau)
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "evaluation.json").write_text(
            json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        write_report(
            cfg.output_dir, "evaluate", cfg,
            {"cache": cfg.cache, "ontology": cfg.ontology, "clean_manifest": clean_path},
            {"total_clips": report.total_clips, "retrieved": report.retrieved_clips,
             "classes_above_90": report.classes_above_90},
            [], (time.monotonic() - started) * 1000,
        )
        click.echo(
            f"retrieval {report.retrieval_rate:.1%}, accuracy {report.accuracy:.1%}"
        )
    except Exception as exc:
        _fail("operation", str(exc), 1)


@main.command("serve")
@config_option
@click.option("--manifest", "manifest_path", type=click.Path(), required=True,
              help="Manifest of the dataset under audit.")
@click.option("--clean-manifest", "clean_path", type=click.Path(), default=None,
              help="Clean manifest supplying reference examples.")
@click.option("--ontology", "ontology_path", type=click.Path(), default=None)
@click.option("--audio-dir", type=click.Path(), default=None)
@click.option("--store-dir", type=click.Path(), default="annotation-store", show_default=True)
@click.option("--static-dir", type=click.Path(), default=None,
              help="Directory with the built annotation UI bundle.")
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--token", default=None, help="Shared auth token; omit to disable auth.")
def serve(config_path, manifest_path, clean_path, ontology_path, audio_dir,
          store_dir, static_dir, port, host, token):
    """Serve the listening-test API (and UI bundle, when provided)."""
    cfg = _load_config(config_path, ontology=ontology_path, audio_dir=audio_dir)
    try:
        manifest = _manifest_at(manifest_path)
        clean = _manifest_at(clean_path) if clean_path else None
        descriptions = {}
        if cfg.ontology:
            ontology = parse_ontology(Path(cfg.ontology))
            descriptions = {node.id: node.description for node in ontology}
        store = AnnotationStore(Path(store_dir))
        service = AnnotationService(store, manifest, clean, descriptions)
        app = create_app(service, audio_dir=cfg.audio_dir, static_dir=static_dir, token=token)
    except Exception as exc:
        _fail("operation", str(exc), 1)
        raise AssertionError("unreachable")
    import uvicorn

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
