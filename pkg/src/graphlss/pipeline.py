"""End-to-end pipeline steps behind the command-line commands.

Each ``run_*`` function takes the resolved configuration plus the shared
sampling/resume flags, performs one stage, writes its artifacts under
the output directory, and returns a JSON-ready summary. File layout:

    out/
      cleaned/<split>.jsonl      tokenized documents
      labeled/<split>.jsonl      documents plus reference labels
      vocab.txt                  content-word vocabulary (train split)
      graphs/<split>/*.bin       serialized graphs + manifest.json
      checkpoints/model.npz      trained parameters
      summaries/<split>.jsonl    selected sentences per document
      reports/*.json|*.csv|*.txt machine- and eye-readable reports
      figures/*.png              rendered charts
      <command>.resolved.cfg     frozen configuration per run
"""

from __future__ import annotations

import json
import re
import time
from pathlib import Path

import numpy as np

from graphlss import features, graph as graphmod, ingest, model, oracle, report
from graphlss.config import PipelineConfig, UsageError
from graphlss.errors import DataError
from graphlss.rouge import score_summary

SPLITS = ("train", "val", "test")
ABLATION_VARIANTS = (
    ("no_ns", "ns"),
    ("no_ss", "ss"),
    ("no_ws", "ws"),
    ("no_ww", "ww"),
)


class RunPaths:
    """All artifact locations derived from the output directory."""

    def __init__(self, out_dir: Path):
        self.out = out_dir

    def cleaned(self, split: str) -> Path:
        return self.out / "cleaned" / f"{split}.jsonl"

    def labeled(self, split: str) -> Path:
        return self.out / "labeled" / f"{split}.jsonl"

    def graphs_dir(self, split: str) -> Path:
        return self.out / "graphs" / split

    def manifest(self, split: str) -> Path:
        return self.graphs_dir(split) / "manifest.json"

    @property
    def vocab(self) -> Path:
        return self.out / "vocab.txt"

    @property
    def checkpoint(self) -> Path:
        return self.out / "checkpoints" / "model.npz"

    def summaries(self, split: str) -> Path:
        return self.out / "summaries" / f"{split}.jsonl"

    def reports(self, name: str) -> Path:
        return self.out / "reports" / name

    def figure(self, name: str) -> Path:
        return self.out / "figures" / name

    def resolved(self, command: str) -> Path:
        return self.out / f"{command}.resolved.cfg"


def write_resolved_config(config: PipelineConfig, command: str) -> None:
    paths = RunPaths(config.out_dir())
    report.write_text(paths.resolved(command), config.resolved_text())


def write_jsonl(path: Path, rows) -> int:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    count = 0
    with tmp.open("w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, sort_keys=True) + "\n")
            count += 1
    tmp.replace(path)
    return count


def sample_items(items: list, max_docs: int | None, sample_seed: int | None) -> list:
    """Head by default; a seeded order-preserving sample when requested."""
    if max_docs is None or max_docs >= len(items):
        return items
    if max_docs < 0:
        raise UsageError("--max-docs must be non-negative")
    if sample_seed is None:
        return items[:max_docs]
    rng = np.random.default_rng(sample_seed)
    picked = rng.choice(len(items), size=max_docs, replace=False)
    return [items[i] for i in sorted(int(i) for i in picked)]


def configured_splits(config: PipelineConfig) -> list[str]:
    return [split for split in SPLITS if config.str_value(f"data.{split}")]


def load_word_filter(config: PipelineConfig) -> features.ContentWordFilter:
    stopwords = ingest.load_stopwords(config.path_value("paths.stopwords"))
    lexicon = features.load_pos_lexicon(config.path_value("paths.lexicon"))
    return features.ContentWordFilter(stopwords=stopwords, lexicon=lexicon)


# --- ingest ---


def run_ingest(
    config: PipelineConfig,
    max_docs: int | None = None,
    sample_seed: int | None = None,
    skip_existing: bool = False,
) -> dict:
    splits = configured_splits(config)
    if not splits:
        raise UsageError("no data.train/data.val/data.test inputs configured")
    paths = RunPaths(config.out_dir())
    stopwords = ingest.load_stopwords(config.path_value("paths.stopwords"))
    min_tokens = config.int_value("ingest.min_tokens")
    summary: dict = {}
    for split in splits:
        out_path = paths.cleaned(split)
        if skip_existing and out_path.is_file():
            retained = sum(1 for _ in ingest.read_documents(out_path))
            summary[split] = {"skipped": True, "retained": retained}
            continue
        counters: dict[str, int] = {}
        raws = list(ingest.load_dataset(config.existing_path(f"data.{split}"), split, counters))
        raws = sample_items(raws, max_docs, sample_seed)
        docs = [ingest.build_document(raw, stopwords, min_tokens) for raw in raws]
        kept = list(ingest.filter_documents(docs, counters))
        ingest.write_documents(kept, out_path)
        entry = dict(counters)
        entry["retained"] = len(kept)
        if kept:
            entry["mean_sentences"] = sum(len(d.sentences) for d in kept) / len(kept)
            entry["mean_article_tokens"] = sum(d.article_token_count for d in kept) / len(kept)
            entry["mean_abstract_tokens"] = sum(d.abstract_token_count for d in kept) / len(kept)
        summary[split] = entry
    report.write_json(paths.reports("ingest.json"), summary)
    write_resolved_config(config, "ingest")
    return summary


# --- label ---


def run_label(
    config: PipelineConfig,
    max_docs: int | None = None,
    sample_seed: int | None = None,
    skip_existing: bool = False,
) -> dict:
    paths = RunPaths(config.out_dir())
    objective = config.str_value("label.objective")
    max_selected = config.optional_int("label.max_selected")
    summary: dict = {}
    found_any = False
    for split in SPLITS:
        cleaned = paths.cleaned(split)
        if not cleaned.is_file():
            continue
        found_any = True
        out_path = paths.labeled(split)
        if skip_existing and out_path.is_file():
            summary[split] = {"skipped": True}
            continue
        docs = sample_items(list(ingest.read_documents(cleaned)), max_docs, sample_seed)
        stats = oracle.LabelStats()
        labeled = list(oracle.label_corpus(docs, max_selected, objective, stats))
        write_jsonl(out_path, (oracle.labeled_to_json(ldoc) for ldoc in labeled))
        summary[split] = stats.as_dict()
    if not found_any:
        raise DataError(f"no cleaned documents under {paths.out / 'cleaned'}; run ingest first")
    report.write_json(paths.reports("labels.json"), summary)
    write_resolved_config(config, "label")
    return summary


# --- graphs ---


def read_labeled(path: Path) -> list[oracle.LabeledDocument]:
    if not path.is_file():
        raise DataError(f"labeled documents not found: {path}; run label first")
    out = []
    with path.open("r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                out.append(oracle.labeled_from_json(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{line_number}: malformed labeled document: {exc}") from exc
    return out


def ensure_vocabulary(config: PipelineConfig, paths: RunPaths) -> features.Vocabulary:
    if paths.vocab.is_file():
        return features.load_vocabulary(paths.vocab)
    train_docs = [ldoc.document for ldoc in read_labeled(paths.labeled("train"))]
    vocab = features.build_vocabulary(train_docs, cap=config.int_value("vocab.cap"))
    features.save_vocabulary(vocab, paths.vocab)
    return vocab


def graph_config_from(config: PipelineConfig, **overrides) -> graphmod.GraphConfig:
    values = {
        "window": config.int_value("graph.window"),
        "t_ss": config.float_value("graph.t_ss"),
        "t_ww": config.float_value("graph.t_ww"),
        "include_ns": config.bool_value("graph.include_ns"),
        "include_ss": config.bool_value("graph.include_ss"),
        "include_ws": config.bool_value("graph.include_ws"),
        "include_ww": config.bool_value("graph.include_ww"),
    }
    values.update(overrides)
    return graphmod.GraphConfig(**values)


def sentence_vector_source(config: PipelineConfig, split: str):
    """File-backed sentence vectors when configured, else pooled."""
    path = config.path_value(f"paths.sentence_embeddings.{split}")
    if path is None:
        return None
    return features.load_sentence_embeddings(path)


def sentence_vectors_for(doc, source, table, word_filter):
    if source is not None:
        return features.external_sentence_vectors(doc, source)
    return features.pooled_sentence_vectors(doc, table, word_filter)


_FILENAME_SAFE = re.compile(r"[^A-Za-z0-9._-]")


def graph_filename(doc_id: str, taken: set[str]) -> str:
    base = _FILENAME_SAFE.sub("_", doc_id) or "doc"
    name = f"{base}.bin"
    serial = 1
    while name in taken:
        name = f"{base}-{serial}.bin"
        serial += 1
    taken.add(name)
    return name


def run_build_graphs(
    config: PipelineConfig,
    max_docs: int | None = None,
    sample_seed: int | None = None,
    skip_existing: bool = False,
) -> dict:
    paths = RunPaths(config.out_dir())
    word_filter = load_word_filter(config)
    vocab = ensure_vocabulary(config, paths)
    table = features.load_word_embeddings(
        config.existing_path("paths.word_embeddings"),
        vocab,
        miss_policy=config.str_value("embeddings.miss_policy"),
    )
    gconfig = graph_config_from(config)
    json_mirror = config.bool_value("graph.json_mirror")
    summary: dict = {}
    built_any = False
    for split in SPLITS:
        labeled_path = paths.labeled(split)
        if not labeled_path.is_file():
            continue
        built_any = True
        ldocs = sample_items(read_labeled(labeled_path), max_docs, sample_seed)
        source = sentence_vector_source(config, split)
        out_dir = paths.graphs_dir(split)
        out_dir.mkdir(parents=True, exist_ok=True)
        stats = graphmod.GraphStats()
        entries = []
        taken: set[str] = set()
        for ldoc in ldocs:
            name = graph_filename(ldoc.document.id, taken)
            target = out_dir / name
            if skip_existing and target.is_file():
                built = graphmod.load_graph(target)
                size = target.stat().st_size
            else:
                vectors = sentence_vectors_for(ldoc.document, source, table, word_filter)
                built = graphmod.build_graph(ldoc, vocab, table, vectors, gconfig, word_filter)
                size = graphmod.save_graph(built, target)
                if json_mirror:
                    report.write_json(
                        target.with_suffix(".json"), graphmod.to_json_dict(built)
                    )
            stats.add(built, serialized_size=size)
            entries.append(
                {
                    "doc_id": ldoc.document.id,
                    "file": name,
                    "bytes": size,
                    "sentences": built.n,
                    "words": built.m,
                }
            )
        manifest = {
            "split": split,
            "graph": {
                "window": gconfig.window,
                "t_ss": gconfig.t_ss,
                "t_ww": gconfig.t_ww,
                "include_ns": gconfig.include_ns,
                "include_ss": gconfig.include_ss,
                "include_ws": gconfig.include_ws,
                "include_ww": gconfig.include_ww,
            },
            "documents": entries,
        }
        report.write_json(paths.manifest(split), manifest)
        summary[split] = stats.as_dict()
        report.write_json(paths.reports(f"graphs.{split}.json"), summary[split])
    if not built_any:
        raise DataError(f"no labeled documents under {paths.out / 'labeled'}; run label first")
    write_resolved_config(config, "build-graphs")
    return summary


def stats_table(stats_dict: dict, title: str) -> str:
    rows = [
        ["sentence nodes", f"{stats_dict['mean_sentence_nodes']:.2f}",
         f"{stats_dict['node_share']['sentence'] * 100:.1f}%"],
        ["word nodes", f"{stats_dict['mean_word_nodes']:.2f}",
         f"{stats_dict['node_share']['word'] * 100:.1f}%"],
    ]
    for edge_type in graphmod.EDGE_TYPES:
        rows.append(
            [
                f"{edge_type} edges",
                f"{stats_dict['mean_edges'][edge_type]:.2f}",
                f"{stats_dict['edge_share'][edge_type] * 100:.1f}%",
            ]
        )
    rows.append(["serialized bytes", f"{stats_dict['mean_bytes']:.0f}", "-"])
    return report.render_table(["item", "mean/doc", "share"], rows, title=title)


def load_split_graphs(
    paths: RunPaths,
    split: str,
    max_docs: int | None = None,
    sample_seed: int | None = None,
) -> tuple[list[graphmod.HeteroGraph], list[dict]]:
    manifest_path = paths.manifest(split)
    if not manifest_path.is_file():
        raise DataError(f"graph manifest not found: {manifest_path}; run build-graphs first")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    entries = sample_items(manifest["documents"], max_docs, sample_seed)
    graphs = [graphmod.load_graph(paths.graphs_dir(split) / entry["file"]) for entry in entries]
    return graphs, entries


def run_stats(
    config: PipelineConfig,
    max_docs: int | None = None,
    sample_seed: int | None = None,
) -> tuple[dict, str]:
    paths = RunPaths(config.out_dir())
    split = config.split_or("train")
    graphs, entries = load_split_graphs(paths, split, max_docs, sample_seed)
    stats = graphmod.GraphStats()
    for built, entry in zip(graphs, entries):
        stats.add(built, serialized_size=entry["bytes"])
    stats_dict = stats.as_dict()
    stats_dict["split"] = split
    text = stats_table(stats_dict, title=f"graph statistics: {split}")
    report.write_json(paths.reports(f"stats.{split}.json"), stats_dict)
    report.write_csv(
        paths.reports(f"stats.{split}.csv"),
        ["item", "mean_per_doc", "share"],
        [["sentence_nodes", stats_dict["mean_sentence_nodes"],
          stats_dict["node_share"]["sentence"]],
         ["word_nodes", stats_dict["mean_word_nodes"], stats_dict["node_share"]["word"]]]
        + [
            [f"{t}_edges", stats_dict["mean_edges"][t], stats_dict["edge_share"][t]]
            for t in graphmod.EDGE_TYPES
        ]
        + [["serialized_bytes", stats_dict["mean_bytes"], ""]],
    )
    report.write_text(paths.reports(f"stats.{split}.txt"), text)
    report.plot_edge_shares(stats_dict["mean_edges"], paths.figure(f"edge_shares.{split}.png"))
    write_resolved_config(config, "stats")
    return stats_dict, text


# --- training ---


def train_config_from(config: PipelineConfig, **overrides) -> model.TrainConfig:
    values = {
        "learning_rate": config.float_value("train.learning_rate"),
        "batch_size": config.int_value("train.batch_size"),
        "max_epochs": config.int_value("train.max_epochs"),
        "patience": config.optional_int("train.patience"),
        "dropout_keep": config.float_value("train.dropout_keep"),
        "lambda_pos": config.optional_float("train.lambda_pos"),
        "lambda_neg": config.float_value("train.lambda_neg"),
        "lambda_min": config.float_value("train.lambda_min"),
        "hidden": config.int_value("train.hidden"),
        "num_layers": config.int_value("train.num_layers"),
        "seed": config.int_value("seed"),
    }
    values.update(overrides)
    try:
        return model.TrainConfig(**values)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def run_train(
    config: PipelineConfig,
    max_docs: int | None = None,
    sample_seed: int | None = None,
    skip_existing: bool = False,
) -> dict:
    paths = RunPaths(config.out_dir())
    if skip_existing and paths.checkpoint.is_file():
        return {"skipped": True, "checkpoint": str(paths.checkpoint)}
    train_graphs, _ = load_split_graphs(paths, "train", max_docs, sample_seed)
    val_graphs, _ = load_split_graphs(paths, "val", max_docs, sample_seed)
    tconfig = train_config_from(config)
    result = model.train(train_graphs, val_graphs, tconfig)
    paths.checkpoint.parent.mkdir(parents=True, exist_ok=True)
    model.save_checkpoint(
        paths.checkpoint,
        result.params,
        result.class_weights,
        epoch=result.best_epoch,
        extra={"best_val_loss": result.best_val_loss, "seed": tconfig.seed},
    )
    report.write_json(paths.reports("train.history.json"), result.history)
    report.write_csv(
        paths.reports("train.history.csv"),
        ["epoch", "train_loss", "val_loss", "tau", "lambda_pos"],
        [
            [row["epoch"], row["train_loss"], row["val_loss"], row["tau"], row["lambda_pos"]]
            for row in result.history
        ],
    )
    report.plot_training_curves(result.history, paths.figure("training_curve.png"))
    report.plot_class_weight_schedule(result.history, paths.figure("class_weight.png"))
    write_resolved_config(config, "train")
    return {
        "epochs": len(result.history),
        "best_epoch": result.best_epoch,
        "best_val_loss": result.best_val_loss,
        "checkpoint": str(paths.checkpoint),
    }


# --- inference ---


def document_texts(paths: RunPaths, split: str) -> dict[str, ingest.Document]:
    labeled = paths.labeled(split)
    if labeled.is_file():
        return {ldoc.document.id: ldoc.document for ldoc in read_labeled(labeled)}
    cleaned = paths.cleaned(split)
    if cleaned.is_file():
        return {doc.id: doc for doc in ingest.read_documents(cleaned)}
    raise DataError(f"no documents for split {split!r} under {paths.out}")


def run_infer(
    config: PipelineConfig,
    max_docs: int | None = None,
    sample_seed: int | None = None,
    skip_existing: bool = False,
) -> dict:
    paths = RunPaths(config.out_dir())
    split = config.split_or("test")
    out_path = paths.summaries(split)
    if skip_existing and out_path.is_file():
        return {"skipped": True, "summaries": str(out_path)}
    params, _, _, _ = model.load_checkpoint(paths.checkpoint)
    graphs, entries = load_split_graphs(paths, split, max_docs, sample_seed)
    docs = document_texts(paths, split)
    mode = config.str_value("select.mode")
    if mode not in ("threshold", "topk"):
        raise UsageError(f"select.mode must be threshold or topk, got {mode!r}")
    k = config.int_value("select.k")
    rows = []
    for built, entry in zip(graphs, entries):
        doc = docs.get(entry["doc_id"])
        if doc is None:
            raise DataError(f"graph {entry['doc_id']!r} has no matching document in {split}")
        selected = model.predict_summary(built, params, selection=mode, k=k)
        rows.append(
            {
                "doc_id": entry["doc_id"],
                "selected": selected,
                "sentences": [doc.sentences[i].raw_text for i in selected],
            }
        )
    write_jsonl(out_path, rows)
    write_resolved_config(config, "infer")
    return {"documents": len(rows), "summaries": str(out_path)}


# --- evaluation ---


def read_summaries(path: Path) -> dict[str, dict]:
    if not path.is_file():
        raise DataError(f"summaries not found: {path}; run infer first")
    out: dict[str, dict] = {}
    with path.open("r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                out[row["doc_id"]] = row
            except (ValueError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{line_number}: malformed summary row: {exc}") from exc
    return out


def summary_tokens(row: dict) -> list[str]:
    tokens: list[str] = []
    for text in row.get("sentences", []):
        tokens.extend(ingest.rouge_tokens(text))
    return tokens


def reference_tokens(doc: ingest.Document) -> list[str]:
    tokens: list[str] = []
    for sentence_tokens in doc.abstract_sentences:
        tokens.extend(sentence_tokens)
    return tokens


def score_documents(
    ldocs: list[oracle.LabeledDocument], summaries: dict[str, dict]
) -> tuple[list[dict], list[str]]:
    """Per-document scores for the join, plus ids failing the join."""
    rows = []
    reference_ids = set()
    missing = set()
    for ldoc in ldocs:
        doc_id = ldoc.document.id
        reference_ids.add(doc_id)
        row = summaries.get(doc_id)
        if row is None:
            missing.add(doc_id)
            continue
        scores = score_summary(summary_tokens(row), reference_tokens(ldoc.document))
        entry = {"doc_id": doc_id, "selected_count": len(row.get("selected", []))}
        for metric, score in scores.items():
            entry[metric] = {
                "precision": score.precision,
                "recall": score.recall,
                "f1": score.f1,
            }
        rows.append(entry)
    missing.update(set(summaries) - reference_ids)
    return rows, sorted(missing)


def corpus_means(rows: list[dict]) -> dict:
    means: dict = {}
    for metric in ("rouge1", "rouge2", "rougeL"):
        means[metric] = {
            part: (
                sum(row[metric][part] for row in rows) / len(rows) if rows else 0.0
            )
            for part in ("precision", "recall", "f1")
        }
    return means


def run_eval(
    config: PipelineConfig,
    max_docs: int | None = None,
    sample_seed: int | None = None,
    deterministic: bool = False,
) -> tuple[dict, int]:
    paths = RunPaths(config.out_dir())
    split = config.split_or("test")
    started = time.perf_counter()
    ldocs = sample_items(read_labeled(paths.labeled(split)), max_docs, sample_seed)
    summaries = read_summaries(paths.summaries(split))
    if max_docs is not None:
        kept = {ldoc.document.id for ldoc in ldocs}
        summaries = {doc_id: row for doc_id, row in summaries.items() if doc_id in kept}
    loaded = time.perf_counter()

    rows, missing = score_documents(ldocs, summaries)
    label_stats = oracle.LabelStats()
    for ldoc in ldocs:
        label_stats.add(ldoc)
    scored = time.perf_counter()

    timings = {
        "load_s": 0.0 if deterministic else loaded - started,
        "score_s": 0.0 if deterministic else scored - loaded,
        "total_s": 0.0 if deterministic else scored - started,
    }
    label_summary = label_stats.as_dict()
    eval_report = {
        "split": split,
        "documents": len(rows),
        "corpus": corpus_means(rows),
        "oracle": label_summary.pop("mean_oracle"),
        "labels": label_summary,
        "selection": {"mode": config.str_value("select.mode"), "k": config.int_value("select.k")},
        "missing_doc_ids": missing,
        "timings_s": timings,
    }
    report.write_json(paths.reports(f"eval.{split}.json"), eval_report)
    header = ["doc_id", "selected_count"]
    for metric in ("rouge1", "rouge2", "rougeL"):
        for part in ("precision", "recall", "f1"):
            header.append(f"{metric}_{part}")
    csv_rows = []
    for row in sorted(rows, key=lambda r: r["doc_id"]):
        csv_row = [row["doc_id"], row["selected_count"]]
        for metric in ("rouge1", "rouge2", "rougeL"):
            for part in ("precision", "recall", "f1"):
                csv_row.append(row[metric][part])
        csv_rows.append(csv_row)
    report.write_csv(paths.reports(f"eval.{split}.csv"), header, csv_rows)
    report.plot_score_histogram(
        [row["rouge1"]["f1"] for row in rows], paths.figure(f"score_hist.{split}.png")
    )
    write_resolved_config(config, "eval")
    return eval_report, (2 if missing else 0)


# --- ablation ---


def mean_rouge_for_params(
    params: model.ModelParams,
    graphs: list[graphmod.HeteroGraph],
    ldocs_by_id: dict[str, oracle.LabeledDocument],
    entries: list[dict],
    mode: str,
    k: int,
) -> dict:
    rows = []
    for built, entry in zip(graphs, entries):
        ldoc = ldocs_by_id[entry["doc_id"]]
        selected = model.predict_summary(built, params, selection=mode, k=k)
        candidate: list[str] = []
        for index in selected:
            candidate.extend(ldoc.document.sentences[index].tokens)
        scores = score_summary(candidate, reference_tokens(ldoc.document))
        row = {}
        for metric, score in scores.items():
            row[metric] = {
                "precision": score.precision,
                "recall": score.recall,
                "f1": score.f1,
            }
        rows.append(row)
    return corpus_means(rows)


def build_graphs_in_memory(
    ldocs: list[oracle.LabeledDocument],
    vocab: features.Vocabulary,
    table: features.EmbeddingTable,
    source,
    word_filter: features.ContentWordFilter,
    gconfig: graphmod.GraphConfig,
) -> tuple[list[graphmod.HeteroGraph], list[dict]]:
    graphs = []
    entries = []
    for ldoc in ldocs:
        vectors = sentence_vectors_for(ldoc.document, source, table, word_filter)
        graphs.append(graphmod.build_graph(ldoc, vocab, table, vectors, gconfig, word_filter))
        entries.append({"doc_id": ldoc.document.id})
    return graphs, entries


def run_ablate(
    config: PipelineConfig,
    max_docs: int | None = None,
    sample_seed: int | None = None,
) -> tuple[dict, str]:
    paths = RunPaths(config.out_dir())
    eval_split = config.str_value("ablate.split")
    if eval_split not in SPLITS:
        raise UsageError(f"ablate.split must be one of {SPLITS}, got {eval_split!r}")
    word_filter = load_word_filter(config)
    vocab = ensure_vocabulary(config, paths)
    table = features.load_word_embeddings(
        config.existing_path("paths.word_embeddings"),
        vocab,
        miss_policy=config.str_value("embeddings.miss_policy"),
    )
    train_ldocs = sample_items(read_labeled(paths.labeled("train")), max_docs, sample_seed)
    eval_ldocs = sample_items(read_labeled(paths.labeled(eval_split)), max_docs, sample_seed)
    train_source = sentence_vector_source(config, "train")
    eval_source = sentence_vector_source(config, eval_split)
    epochs = config.int_value("ablate.max_epochs") or config.int_value("train.max_epochs")
    tconfig = train_config_from(config, max_epochs=epochs)
    mode = config.str_value("select.mode")
    k = config.int_value("select.k")
    ldocs_by_id = {ldoc.document.id: ldoc for ldoc in eval_ldocs}

    results = []
    for variant, removed in (("full", None),) + ABLATION_VARIANTS:
        overrides = {f"include_{removed}": False} if removed else {}
        gconfig = graph_config_from(config, **overrides)
        train_graphs, _ = build_graphs_in_memory(
            train_ldocs, vocab, table, train_source, word_filter, gconfig
        )
        eval_graphs, eval_entries = build_graphs_in_memory(
            eval_ldocs, vocab, table, eval_source, word_filter, gconfig
        )
        outcome = model.train(train_graphs, eval_graphs, tconfig)
        means = mean_rouge_for_params(
            outcome.params, eval_graphs, ldocs_by_id, eval_entries, mode, k
        )
        results.append(
            {
                "variant": variant,
                "removed": removed,
                "rouge1_precision": means["rouge1"]["precision"],
                "rouge1_recall": means["rouge1"]["recall"],
                "rouge1_f1": means["rouge1"]["f1"],
                "rouge2_f1": means["rouge2"]["f1"],
                "rougeL_f1": means["rougeL"]["f1"],
            }
        )

    baseline = results[0]["rouge1_f1"]
    for row in results:
        row["rouge1_f1_drop"] = baseline - row["rouge1_f1"]
    ordered = [results[0]] + sorted(
        results[1:], key=lambda row: (-row["rouge1_f1_drop"], row["variant"])
    )
    payload = {"split": eval_split, "epochs_per_variant": epochs, "variants": ordered}
    report.write_json(paths.reports("ablation.json"), payload)
    report.write_csv(
        paths.reports("ablation.csv"),
        ["variant", "removed", "rouge1_f1", "rouge1_f1_drop", "rouge2_f1", "rougeL_f1"],
        [
            [row["variant"], row["removed"] or "", row["rouge1_f1"], row["rouge1_f1_drop"],
             row["rouge2_f1"], row["rougeL_f1"]]
            for row in ordered
        ],
    )
    report.plot_ablation(ordered, paths.figure("ablation.png"))
    text = report.render_table(
        ["variant", "R-1 F1", "drop"],
        [
            [row["variant"], f"{row['rouge1_f1']:.4f}", f"{row['rouge1_f1_drop']:+.4f}"]
            for row in ordered
        ],
        title=f"edge ablation on {eval_split}",
    )
    report.write_text(paths.reports("ablation.txt"), text)
    write_resolved_config(config, "ablate")
    return payload, text


# --- threshold calibration ---


def run_calibrate(
    config: PipelineConfig,
    max_docs: int | None = None,
    sample_seed: int | None = None,
) -> tuple[dict, str]:
    paths = RunPaths(config.out_dir())
    split = config.split_or("train")
    word_filter = load_word_filter(config)
    vocab = ensure_vocabulary(config, paths)
    table = features.load_word_embeddings(
        config.existing_path("paths.word_embeddings"),
        vocab,
        miss_policy=config.str_value("embeddings.miss_policy"),
    )
    cap = max_docs if max_docs is not None else config.int_value("calibrate.max_docs")
    ldocs = sample_items(read_labeled(paths.labeled(split)), cap, sample_seed)
    source = sentence_vector_source(config, split)
    target = config.float_value("calibrate.target_ws_share")

    rows = []
    for t_ss in config.float_list("calibrate.t_ss_grid"):
        for t_ww in config.float_list("calibrate.t_ww_grid"):
            gconfig = graph_config_from(config, t_ss=t_ss, t_ww=t_ww)
            counts = {t: 0 for t in graphmod.EDGE_TYPES}
            for ldoc in ldocs:
                vectors = sentence_vectors_for(ldoc.document, source, table, word_filter)
                built = graphmod.build_graph(ldoc, vocab, table, vectors, gconfig, word_filter)
                for edge_type in graphmod.EDGE_TYPES:
                    counts[edge_type] += built.edge_count(edge_type)
            total = sum(counts.values())
            rows.append(
                {
                    "t_ss": t_ss,
                    "t_ww": t_ww,
                    **counts,
                    "ws_share": counts["ws"] / total if total else 0.0,
                }
            )

    best = min(rows, key=lambda row: (abs(row["ws_share"] - target), -row["t_ww"], -row["t_ss"]))
    payload = {
        "split": split,
        "documents": len(ldocs),
        "target_ws_share": target,
        "rows": rows,
        "recommended": {"graph.t_ss": best["t_ss"], "graph.t_ww": best["t_ww"]},
    }
    report.write_json(paths.reports("calibration.json"), payload)
    report.write_csv(
        paths.reports("calibration.csv"),
        ["t_ss", "t_ww", "ns", "ss", "ws", "ww", "ws_share"],
        [
            [row["t_ss"], row["t_ww"], row["ns"], row["ss"], row["ws"], row["ww"],
             row["ws_share"]]
            for row in rows
        ],
    )
    report.plot_calibration(rows, target, paths.figure("calibration.png"))
    text = report.render_table(
        ["t_ss", "t_ww", "ws share"],
        [[row["t_ss"], row["t_ww"], f"{row['ws_share'] * 100:.1f}%"] for row in rows],
        title=f"threshold sweep on {split} "
        f"(recommended t_ss={best['t_ss']}, t_ww={best['t_ww']})",
    )
    report.write_text(paths.reports("calibration.txt"), text)
    write_resolved_config(config, "calibrate")
    return payload, text
