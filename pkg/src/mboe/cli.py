"""Command-line surface for batch pipelines.

Subcommands: build-dict, detect, train, eval, analyze
{ablation|sweep|pearson|stats}, attribute.  Exit codes: 0 success,
1 runtime failure, 2 usage/configuration error.

Every artifact an invocation writes gets a sibling ``<artifact>.manifest.json``
recording the command, its configuration snapshot, input checksums, seed
list, tool version, and wall-clock time.  Artifacts themselves are
deterministic given identical inputs and seeds; manifests are not part
of that guarantee (they carry timing).

A JSON file passed via --config supplies defaults for any long flag
(dashes become underscores); explicit flags win.  The analyze ablation
and sweep subcommands read the experiment layout (corpora, dictionaries,
model options, seeds) from the config file; see README for the schema.
"""

from __future__ import annotations

import csv as csv_module
import hashlib
import json
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .analysis import (
    ABLATION_VARIANTS,
    EvalReport,
    PipelineData,
    PipelineOptions,
    ablation_run,
    detection_rate_sweep,
    evaluate_examples,
    top_entities,
    write_sweep_csv,
)
from .corpus import LabelVocabulary, load_documents
from .detection import (
    Detector,
    from_gold,
    save_detections,
    subsample,
    subsample_seed,
)
from .dictionary import (
    build_interlanguage_map,
    build_mention_dictionary,
    load_interlanguage_map,
    load_mention_dictionary,
    read_anchor_records,
    read_sitelink_records,
)
from .embeddings import EntityEmbeddingStore, load_embeddings
from .errors import MBoEError
from .metrics import pearson
from .model import MULTICLASS, MULTILABEL, BoEModel, FeatureMask
from .synthetic import SyntheticSpec, build_synthetic_task
from .trainer import (
    HashingEncoder,
    TrainConfig,
    prepare_example,
    read_model_meta,
    load_model,
    save_model,
    train as train_loop,
)

def _checksum(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(
    artifact: Path,
    command: str,
    params: dict,
    inputs: list[str | Path],
    seeds: list[int],
    started: float,
) -> None:
    manifest = {
        "command": command,
        "config": {k: (str(v) if isinstance(v, Path) else v) for k, v in params.items()},
        "input_checksums": {str(p): _checksum(p) for p in inputs},
        "seeds": seeds,
        "tool_version": __version__,
        "wall_clock_seconds": round(time.perf_counter() - started, 6),
    }
    Path(str(artifact) + ".manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _apply_config_defaults(ctx: click.Context, config_path: str | None) -> dict:
    """Fill parameters not given on the command line from the config file."""
    if config_path is None:
        return {}
    try:
        cfg = json.loads(Path(config_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read config {config_path}: {exc}")
    for name, value in cfg.items():
        key = name.replace("-", "_")
        if key in ctx.params and ctx.get_parameter_source(key) == click.core.ParameterSource.DEFAULT:
            ctx.params[key] = value
    return cfg


def _fail(exc: Exception) -> "click.ClickException":
    err = click.ClickException(str(exc))
    err.exit_code = 1
    return err


def _load_dictionaries(paths: tuple[str, ...]) -> dict:
    dictionaries = {}
    for path in paths:
        dictionary = load_mention_dictionary(path)
        dictionaries[dictionary.language] = dictionary
    return dictionaries


def _seed_list(seed: int, seeds: int) -> list[int]:
    return [seed + i for i in range(seeds)]


@click.group()
@click.version_option(version=__version__, prog_name="mboe")
def main() -> None:
    """Bag-of-entities pipelines: dictionaries, detection, training,
    evaluation, and analysis."""


@main.command("build-dict")
@click.option("--mentions", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Mention TSV: mention<TAB>wiki_title<TAB>count.")
@click.option("--language", default=None, help="Language code of the mention TSV.")
@click.option("--sitelinks", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Sitelink TSV: language<TAB>wiki_title<TAB>qid.")
@click.option("--min-count", type=int, default=1, show_default=True,
              help="Drop candidates whose aggregated anchor count is below this.")
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.pass_context
def cmd_build_dict(ctx, mentions, language, sitelinks, min_count, out_dir, config_path):
    """Build persisted dictionaries from tabular extracts."""
    _apply_config_defaults(ctx, config_path)
    mentions = ctx.params["mentions"]
    language = ctx.params["language"]
    sitelinks = ctx.params["sitelinks"]
    min_count = ctx.params["min_count"]
    if mentions is None and sitelinks is None:
        raise click.UsageError("nothing to build: pass --mentions and/or --sitelinks")
    if mentions is not None and not language:
        raise click.UsageError("--mentions requires --language")
    started = time.perf_counter()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = {"mentions": mentions, "language": language, "sitelinks": sitelinks,
              "min_count": min_count}
    try:
        if mentions is not None:
            dictionary = build_mention_dictionary(
                read_anchor_records(mentions), language, min_count=min_count
            )
            target = out / f"mentions.{dictionary.language}.mboe"
            dictionary.save(target)
            _write_manifest(target, "build-dict", params, [mentions], [], started)
            click.echo(f"mention dictionary: {len(dictionary)} mentions -> {target}")
        if sitelinks is not None:
            ilmap = build_interlanguage_map(read_sitelink_records(sitelinks))
            target = out / "interlanguage.mboe"
            ilmap.save(target)
            _write_manifest(target, "build-dict", params, [sitelinks], [], started)
            click.echo(f"inter-language map: {len(ilmap)} entries -> {target}")
    except MBoEError as exc:
        raise _fail(exc)


@main.command("detect")
@click.option("--docs", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--mention-dict", "mention_dicts", type=click.Path(exists=True, dir_okay=False),
              multiple=True, required=True, help="Mention dictionary file (repeat per language).")
@click.option("--ilmap", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--boundary/--no-boundary", default=False, show_default=True,
              help="Require non-letter characters around matches.")
@click.option("--max-entities", type=int, default=None)
@click.option("--keep-rate", type=float, default=1.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--gold", is_flag=True, default=False, help="Use gold annotations instead of detection.")
@click.option("--threads", type=int, default=0, help="Worker threads (0 = all cores).")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.pass_context
def cmd_detect(ctx, docs, mention_dicts, ilmap, out, boundary, max_entities,
               keep_rate, seed, gold, threads, config_path):
    """Detect entities in a document JSONL; writes detection JSONL and
    prints the per-language mean bag size."""
    _apply_config_defaults(ctx, config_path)
    p = ctx.params
    docs, ilmap, out = p["docs"], p["ilmap"], p["out"]
    mention_dicts = tuple(p["mention_dicts"])
    keep_rate, seed, gold, threads = p["keep_rate"], p["seed"], p["gold"], p["threads"]
    started = time.perf_counter()
    if threads <= 0:
        import os as _os

        threads = _os.cpu_count() or 1
    try:
        documents = load_documents(docs)
        ilm = load_interlanguage_map(ilmap)
        detectors = {
            lang: Detector(d, ilm, boundary_mode=p["boundary"], max_entities=p["max_entities"])
            for lang, d in _load_dictionaries(mention_dicts).items()
        }
        pairs = []
        totals: dict[str, list[int]] = {}
        skipped = 0
        if gold:
            bags = [from_gold(doc) for doc in documents]
            kept_docs = documents
        else:
            kept_docs = []
            for doc in documents:
                if doc.language not in detectors:
                    click.echo(f"warning: no dictionary for {doc.language!r}, skipping {doc.id}", err=True)
                    skipped += 1
                    continue
                kept_docs.append(doc)
            by_lang: dict[str, list] = {}
            for doc in kept_docs:
                by_lang.setdefault(doc.language, []).append(doc)
            bag_by_id = {}
            for lang, lang_docs in by_lang.items():
                for doc, bag in zip(lang_docs, detectors[lang].detect_corpus(lang_docs, threads)):
                    bag_by_id[doc.id] = bag
            bags = [bag_by_id[doc.id] for doc in kept_docs]
        for doc, bag in zip(kept_docs, bags):
            if keep_rate < 1.0:
                bag = subsample(bag, keep_rate, subsample_seed(seed, doc.id))
            pairs.append((doc.id, bag))
            totals.setdefault(doc.language, []).append(len(bag))
        save_detections(pairs, out)
        _write_manifest(Path(out), "detect", {k: str(v) for k, v in p.items()},
                        [docs, ilmap, *mention_dicts], [seed], started)
        click.echo("language  mean_entities  docs")
        for lang in sorted(totals):
            counts = totals[lang]
            click.echo(f"{lang:<9} {sum(counts) / len(counts):<14.3f} {len(counts)}")
        click.echo(f"documents: {len(pairs)}, skipped: {skipped} -> {out}")
    except MBoEError as exc:
        raise _fail(exc)


def _store_for(embeddings: str | None, dim: int, init_seed: int, init_scale: float) -> EntityEmbeddingStore:
    if embeddings is not None:
        return load_embeddings(embeddings, dim, init_seed=init_seed, init_scale=init_scale)
    return EntityEmbeddingStore(dim, init_seed=init_seed, init_scale=init_scale)


@main.command("train")
@click.option("--train", "train_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--val", "val_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--mention-dict", "mention_dicts", type=click.Path(exists=True, dir_okay=False),
              multiple=True)
@click.option("--ilmap", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False), default=None,
              help="word2vec-text entity embedding file; omit for random-init.")
@click.option("--dim", type=int, default=64, show_default=True)
@click.option("--mode", type=click.Choice([MULTICLASS, MULTILABEL]), default=MULTICLASS,
              show_default=True)
@click.option("--feature-mask", type=click.Choice([m.value for m in FeatureMask]),
              default="both", show_default=True)
@click.option("--gold", is_flag=True, default=False)
@click.option("--keep-rate", type=float, default=1.0, show_default=True)
@click.option("--boundary/--no-boundary", default=False)
@click.option("--max-entities", type=int, default=None)
@click.option("--lr", type=float, default=1e-3, show_default=True)
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--clip-norm", type=float, default=1.0, show_default=True)
@click.option("--max-epochs", type=int, default=100, show_default=True)
@click.option("--patience", type=int, default=5, show_default=True)
@click.option("--weight-decay", type=float, default=0.01, show_default=True)
@click.option("--freeze-embeddings", is_flag=True, default=False)
@click.option("--encoder-seed", type=int, default=0, show_default=True)
@click.option("--init-scale", type=float, default=0.02, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--seeds", type=int, default=1, show_default=True,
              help="Train N models with seeds seed..seed+N-1.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.pass_context
def cmd_train(ctx, train_path, val_path, mention_dicts, ilmap, embeddings, dim, mode,
              feature_mask, gold, keep_rate, boundary, max_entities, lr, batch_size,
              clip_norm, max_epochs, patience, weight_decay, freeze_embeddings,
              encoder_seed, init_scale, seed, seeds, out, config_path):
    """Train a model on a source-language corpus."""
    _apply_config_defaults(ctx, config_path)
    p = ctx.params
    started = time.perf_counter()
    if not p["gold"] and (not p["mention_dicts"] or p["ilmap"] is None):
        raise click.UsageError("--mention-dict and --ilmap are required unless --gold is set")
    try:
        train_docs = load_documents(p["train_path"])
        val_docs = load_documents(p["val_path"])
        if not train_docs:
            raise click.UsageError(f"{p['train_path']} holds no documents")
        labels = set()
        for doc in train_docs + val_docs:
            labels |= doc.labels or set()
        if not labels:
            raise _fail(MBoEError("no labels found in the training corpus"))
        vocab = LabelVocabulary(labels)
        detectors = {}
        if not p["gold"]:
            ilm = load_interlanguage_map(p["ilmap"])
            detectors = {
                lang: Detector(d, ilm, boundary_mode=p["boundary"], max_entities=p["max_entities"])
                for lang, d in _load_dictionaries(tuple(p["mention_dicts"])).items()
            }
        encoder = HashingEncoder(p["dim"], seed=p["encoder_seed"])
        seed_values = _seed_list(p["seed"], p["seeds"])
        inputs = [p["train_path"], p["val_path"], *p["mention_dicts"]]
        if p["ilmap"]:
            inputs.append(p["ilmap"])
        if p["embeddings"]:
            inputs.append(p["embeddings"])
        outputs = []
        for run_seed in seed_values:
            store = _store_for(p["embeddings"], p["dim"], 0, p["init_scale"])
            model = BoEModel.create(
                store, len(vocab), feature_mask=p["feature_mask"], mode=p["mode"],
                labels=vocab.labels(),
            )
            config = TrainConfig(
                learning_rate=p["lr"], batch_size=p["batch_size"], clip_norm=p["clip_norm"],
                seed=run_seed, max_epochs=p["max_epochs"], patience=p["patience"],
                embeddings_trainable=not p["freeze_embeddings"], loss_mode=p["mode"],
                weight_decay=p["weight_decay"],
            )

            def _examples(docs):
                result = []
                for doc in docs:
                    if p["gold"]:
                        bag = from_gold(doc)
                    else:
                        det = detectors.get(doc.language)
                        if det is None:
                            raise MBoEError(f"no dictionary for language {doc.language!r} (document {doc.id!r})")
                        bag = det.detect(doc)
                    if p["keep_rate"] < 1.0:
                        bag = subsample(bag, p["keep_rate"], subsample_seed(run_seed, doc.id))
                    result.append(prepare_example(doc, bag, vocab, p["mode"],
                                                  encoder=encoder, dim=p["dim"]))
                return result

            history = train_loop(model, _examples(train_docs), _examples(val_docs), config)
            target = Path(p["out"]) if len(seed_values) == 1 else Path(
                str(Path(p["out"]).with_suffix("")) + f".seed{run_seed}" + Path(p["out"]).suffix
            )
            save_model(model, target)
            outputs.append(target)
            click.echo(
                f"seed {run_seed}: epochs={len(history.records)} "
                f"best_val={history.best_metric if history.best_metric is not None else 'n/a'} -> {target}"
            )
        for target in outputs:
            _write_manifest(target, "train", {k: str(v) for k, v in p.items()},
                            inputs, seed_values, started)
    except MBoEError as exc:
        raise _fail(exc)


def _group_by_language(docs):
    grouped: dict[str, list] = {}
    for doc in docs:
        grouped.setdefault(doc.language, []).append(doc)
    return grouped


@main.command("eval")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--docs", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--mention-dict", "mention_dicts", type=click.Path(exists=True, dir_okay=False),
              multiple=True)
@click.option("--ilmap", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--metric", type=click.Choice(["accuracy", "micro-f1"]), default=None,
              help="Defaults to the model's native metric.")
@click.option("--source-lang", default=None,
              help="Language excluded from the target average.")
@click.option("--gold", is_flag=True, default=False)
@click.option("--keep-rate", type=float, default=1.0, show_default=True)
@click.option("--boundary/--no-boundary", default=False)
@click.option("--max-entities", type=int, default=None)
@click.option("--encoder-seed", type=int, default=0, show_default=True)
@click.option("--init-scale", type=float, default=0.02, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--seeds", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write report JSON here.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.pass_context
def cmd_eval(ctx, model_path, docs, mention_dicts, ilmap, embeddings, metric, source_lang,
             gold, keep_rate, boundary, max_entities, encoder_seed, init_scale, seed, seeds,
             out, config_path):
    """Evaluate a trained model per language (zero-shot harness)."""
    _apply_config_defaults(ctx, config_path)
    p = ctx.params
    started = time.perf_counter()
    try:
        meta = read_model_meta(p["model_path"])
        native = "accuracy" if meta["mode"] == MULTICLASS else "micro-f1"
        metric = p["metric"] or native
        if metric != native:
            raise click.UsageError(
                f"metric {metric!r} is invalid for a {meta['mode']} model (use {native!r})"
            )
        if meta["labels"] is None:
            raise _fail(MBoEError("model file does not carry a label vocabulary"))
        vocab = LabelVocabulary(meta["labels"])
        store = _store_for(p["embeddings"], meta["dim"], 0, p["init_scale"])
        model = load_model(p["model_path"], store)
        documents = load_documents(p["docs"])
        if not documents:
            raise _fail(MBoEError(f"{p['docs']} holds no documents"))
        grouped = _group_by_language(documents)
        detectors = {}
        if not p["gold"]:
            if not p["mention_dicts"] or p["ilmap"] is None:
                raise click.UsageError("--mention-dict and --ilmap are required unless --gold is set")
            ilm = load_interlanguage_map(p["ilmap"])
            loaded = _load_dictionaries(tuple(p["mention_dicts"]))
            detectors = {
                lang: Detector(d, ilm, boundary_mode=p["boundary"], max_entities=p["max_entities"])
                for lang, d in loaded.items()
            }
            missing = sorted(set(grouped) - set(detectors))
            if missing:
                raise _fail(MBoEError(f"no dictionary for languages: {', '.join(missing)}"))
        encoder = HashingEncoder(meta["dim"], seed=p["encoder_seed"])
        seed_values = _seed_list(p["seed"], p["seeds"])
        per_language: dict[str, list[float]] = {}
        target_avg: list[float] = []
        for run_seed in seed_values:
            scores = {}
            for lang, lang_docs in sorted(grouped.items()):
                examples = []
                for doc in lang_docs:
                    bag = from_gold(doc) if p["gold"] else detectors[lang].detect(doc)
                    if p["keep_rate"] < 1.0:
                        bag = subsample(bag, p["keep_rate"], subsample_seed(run_seed, doc.id))
                    examples.append(prepare_example(doc, bag, vocab, meta["mode"],
                                                    encoder=encoder, dim=meta["dim"]))
                scores[lang] = evaluate_examples(model, examples)
            source = p["source_lang"] or "__none__"
            targets = [s for lang, s in scores.items() if lang != source]
            target_avg.append(float(np.mean(targets)) if targets else float("nan"))
            for lang, s in scores.items():
                per_language.setdefault(lang, []).append(s)
        report = EvalReport(
            metric=metric,
            source_language=p["source_lang"] or "",
            seeds=tuple(seed_values),
            per_language=per_language,
            target_avg=target_avg,
            config_fingerprint=hashlib.sha256(
                json.dumps({k: str(v) for k, v in p.items()}, sort_keys=True).encode()
            ).hexdigest(),
        )
        click.echo(report.to_text())
        if p["out"]:
            Path(p["out"]).write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n",
                                      encoding="utf-8")
            inputs = [p["model_path"], p["docs"], *p["mention_dicts"]]
            if p["ilmap"]:
                inputs.append(p["ilmap"])
            if p["embeddings"]:
                inputs.append(p["embeddings"])
            _write_manifest(Path(p["out"]), "eval", {k: str(v) for k, v in p.items()},
                            inputs, seed_values, started)
    except MBoEError as exc:
        raise _fail(exc)


@main.group("analyze")
def analyze() -> None:
    """Ablations, sweeps, correlation, and corpus statistics."""


def _load_experiment(config_path: str) -> tuple[PipelineData, PipelineOptions, list[int]]:
    try:
        cfg = json.loads(Path(config_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read config {config_path}: {exc}")
    data_cfg = cfg.get("data")
    if data_cfg is None:
        raise click.UsageError("config is missing the 'data' section")
    if "synthetic" in data_cfg:
        data = build_synthetic_task(SyntheticSpec(**data_cfg["synthetic"]))
    else:
        for key in ("train", "val", "test", "dictionaries", "ilmap", "source_language"):
            if key not in data_cfg:
                raise click.UsageError(f"config data section is missing {key!r}")
        train_docs = load_documents(data_cfg["train"])
        val_docs = load_documents(data_cfg["val"])
        test_cfg = data_cfg["test"]
        if isinstance(test_cfg, str):
            test_docs = _group_by_language(load_documents(test_cfg))
        else:
            test_docs = {lang: load_documents(path) for lang, path in test_cfg.items()}
        dictionaries = {}
        for lang, path in data_cfg["dictionaries"].items():
            dictionaries[lang.lower()] = load_mention_dictionary(path)
        labels = set()
        for doc in train_docs + val_docs:
            labels |= doc.labels or set()
        data = PipelineData(
            source_language=data_cfg["source_language"].lower(),
            train_docs=train_docs,
            val_docs=val_docs,
            test_docs=test_docs,
            dictionaries=dictionaries,
            ilmap=load_interlanguage_map(data_cfg["ilmap"]),
            label_vocab=LabelVocabulary(labels),
        )
    opt_cfg = dict(cfg.get("options", {}))
    if "dim" not in opt_cfg:
        raise click.UsageError("config options section must set 'dim'")
    train_cfg = TrainConfig(**opt_cfg.pop("train", {}))
    embeddings = opt_cfg.pop("embeddings", None)
    try:
        options = PipelineOptions(
            train=train_cfg, embeddings_path=embeddings,
            **{k: (FeatureMask(v) if k == "feature_mask" else v) for k, v in opt_cfg.items()},
        )
    except TypeError as exc:
        raise click.UsageError(f"bad options section: {exc}")
    seeds = [int(s) for s in cfg.get("seeds", [0])]
    return data, options, seeds


def _report_table(reports: dict[str, EvalReport]) -> str:
    lines = []
    name_width = max(len(name) for name in reports)
    for name, report in reports.items():
        mean, ci = report.target_summary()
        ci_text = f" ± {ci:.4f}" if ci is not None else ""
        lines.append(f"{name.ljust(name_width)}  target avg. {mean:.4f}{ci_text}")
    return "\n".join(lines)


@analyze.command("ablation")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--variants", default="without_attention,commonness_only,cosine_only",
              show_default=True, help="Comma-separated variant names.")
@click.option("--seeds", type=int, default=None, help="Override the config seed list with N seeds.")
@click.option("--seed", type=int, default=0, show_default=True, help="First seed when --seeds is used.")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def cmd_ablation(config_path, variants, seeds, seed, out):
    """Paired multi-seed comparison of the full model and its ablations."""
    started = time.perf_counter()
    data, options, seed_values = _load_experiment(config_path)
    if seeds is not None:
        seed_values = _seed_list(seed, seeds)
    names = [v.strip() for v in variants.split(",") if v.strip()]
    unknown = [n for n in names if n not in ABLATION_VARIANTS]
    if unknown:
        raise click.UsageError(f"unknown variants: {', '.join(unknown)} "
                               f"(choose from {sorted(ABLATION_VARIANTS)})")
    try:
        reports = ablation_run(data, options, names, seed_values)
    except MBoEError as exc:
        raise _fail(exc)
    click.echo(_report_table(reports))
    if out:
        payload = {name: report.to_json() for name, report in reports.items()}
        Path(out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        _write_manifest(Path(out), "analyze ablation",
                        {"config": config_path, "variants": names},
                        [config_path], seed_values, started)


@analyze.command("sweep")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--rates", default="0.25,0.5,0.75,1.0", show_default=True)
@click.option("--seeds", type=int, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Curve CSV (rate,mean,ci).")
def cmd_sweep(config_path, rates, seeds, seed, out):
    """Detection-rate sweep: metric as a function of the entity keep rate."""
    started = time.perf_counter()
    data, options, seed_values = _load_experiment(config_path)
    if seeds is not None:
        seed_values = _seed_list(seed, seeds)
    try:
        rate_values = [float(r) for r in rates.split(",") if r.strip()]
    except ValueError:
        raise click.UsageError(f"bad --rates value {rates!r}")
    try:
        points = detection_rate_sweep(data, options, rate_values, seed_values)
    except MBoEError as exc:
        raise _fail(exc)
    for p in points:
        ci_text = f" ± {p.ci95:.4f}" if p.ci95 is not None else ""
        click.echo(f"rate {p.rate:.2f}: {p.mean:.4f}{ci_text}")
    write_sweep_csv(points, out)
    _write_manifest(Path(out), "analyze sweep", {"config": config_path, "rates": rate_values},
                    [config_path], seed_values, started)


@analyze.command("pearson")
@click.option("--csv", "csv_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--x-col", default=None, help="Column name of the first series.")
@click.option("--y-col", default=None, help="Column name of the second series.")
@click.option("--x", "x_inline", default=None, help="Comma-separated values (alternative to --csv).")
@click.option("--y", "y_inline", default=None)
def cmd_pearson(csv_path, x_col, y_col, x_inline, y_inline):
    """Pearson correlation between two series (CSV columns or inline)."""
    if csv_path is not None:
        if not x_col or not y_col:
            raise click.UsageError("--csv requires --x-col and --y-col")
        with open(csv_path, newline="", encoding="utf-8") as fh:
            reader = csv_module.DictReader(fh)
            if reader.fieldnames is None or x_col not in reader.fieldnames or y_col not in reader.fieldnames:
                raise click.UsageError(
                    f"columns {x_col!r}/{y_col!r} not found in {csv_path} "
                    f"(has {reader.fieldnames})"
                )
            xs, ys = [], []
            for row in reader:
                if row[x_col].strip() == "" or row[y_col].strip() == "":
                    continue  # missing cell: skip the pair
                xs.append(float(row[x_col]))
                ys.append(float(row[y_col]))
    elif x_inline is not None and y_inline is not None:
        xs = [float(v) for v in x_inline.split(",") if v.strip()]
        ys = [float(v) for v in y_inline.split(",") if v.strip()]
    else:
        raise click.UsageError("pass --csv with column names, or --x and --y")
    try:
        r = pearson(xs, ys)
    except (MBoEError, ValueError) as exc:
        raise _fail(exc)
    click.echo(f"pearson r = {r:.4f} (n = {len(xs)})")


@analyze.command("stats")
@click.option("--docs", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--mention-dict", "mention_dicts", type=click.Path(exists=True, dir_okay=False),
              multiple=True, required=True)
@click.option("--ilmap", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--boundary/--no-boundary", default=False)
def cmd_stats(docs, mention_dicts, ilmap, boundary):
    """Per-language mean number of detected entities."""
    from .detection import detection_stats

    try:
        documents = load_documents(docs)
        ilm = load_interlanguage_map(ilmap)
        detectors = {
            lang: Detector(d, ilm, boundary_mode=boundary)
            for lang, d in _load_dictionaries(mention_dicts).items()
        }
        stats = detection_stats(documents, detectors, on_missing_language="skip")
    except (MBoEError, ValueError) as exc:
        raise _fail(exc)
    click.echo("language  mean_entities")
    for lang, mean in stats.items():
        click.echo(f"{lang:<9} {mean:.3f}")


@main.command("attribute")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--docs", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--mention-dict", "mention_dicts", type=click.Path(exists=True, dir_okay=False),
              multiple=True)
@click.option("--ilmap", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--gold", is_flag=True, default=False)
@click.option("-k", "top_k", type=int, default=3, show_default=True)
@click.option("--encoder-seed", type=int, default=0, show_default=True)
@click.option("--init-scale", type=float, default=0.02, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="JSONL output.")
def cmd_attribute(model_path, docs, mention_dicts, ilmap, embeddings, gold, top_k,
                  encoder_seed, init_scale, out):
    """Most influential entities per document, by attention weight."""
    started = time.perf_counter()
    try:
        meta = read_model_meta(model_path)
        store = _store_for(embeddings, meta["dim"], 0, init_scale)
        model = load_model(model_path, store)
        documents = load_documents(docs)
        detectors = {}
        if not gold:
            if not mention_dicts or ilmap is None:
                raise click.UsageError("--mention-dict and --ilmap are required unless --gold is set")
            ilm = load_interlanguage_map(ilmap)
            detectors = {
                lang: Detector(d, ilm) for lang, d in _load_dictionaries(mention_dicts).items()
            }
        encoder = HashingEncoder(meta["dim"], seed=encoder_seed)
        rows = []
        for doc in documents:
            if gold:
                bag = from_gold(doc)
            else:
                det = detectors.get(doc.language)
                if det is None:
                    raise MBoEError(f"no dictionary for language {doc.language!r} (document {doc.id!r})")
                bag = det.detect(doc)
            h = doc.encoder_vector if doc.encoder_vector is not None else encoder.encode(doc.text, doc.language)
            ranked = top_entities(model, h, bag, top_k) if len(bag) else []
            rows.append({"id": doc.id,
                         "top_entities": [{"qid": q, "weight": w} for q, w in ranked]})
            pretty = ", ".join(f"{q} ({w:.3f})" for q, w in ranked) or "(no entities)"
            click.echo(f"{doc.id}: {pretty}")
        if out:
            with open(out, "w", encoding="utf-8") as fh:
                for row in rows:
                    fh.write(json.dumps(row, ensure_ascii=False) + "\n")
            inputs = [model_path, docs, *mention_dicts]
            if ilmap:
                inputs.append(ilmap)
            _write_manifest(Path(out), "attribute", {"k": top_k}, inputs, [], started)
    except MBoEError as exc:
        raise _fail(exc)


if __name__ == "__main__":
    main()
