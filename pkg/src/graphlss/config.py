"""Run configuration as a flat key=value table.

A run is described by a text file of ``key = value`` lines plus
command-line overrides in the same syntax. Keys are fixed: anything
outside the registry is rejected so typos fail loudly. Every command
writes the fully resolved table next to its outputs, which makes any
artifact reproducible from the files beside it.

This module stays import-light on purpose; thread limits must be
settable before the numeric stack loads.
"""

from __future__ import annotations

from pathlib import Path


class UsageError(Exception):
    """Bad invocation or bad configuration; maps to exit code 1."""


# key -> (default, description)
KNOWN_KEYS: dict[str, tuple[str, str]] = {
    "data.train": ("", "raw JSON-lines file for the training split"),
    "data.val": ("", "raw JSON-lines file for the validation split"),
    "data.test": ("", "raw JSON-lines file for the test split"),
    "paths.stopwords": ("", "stopword list override (blank: packaged list)"),
    "paths.lexicon": ("", "word-class lexicon override (blank: packaged list)"),
    "paths.word_embeddings": ("", "word embedding text file"),
    "paths.sentence_embeddings.train": ("", "sentence vectors for train (blank: pooled)"),
    "paths.sentence_embeddings.val": ("", "sentence vectors for val (blank: pooled)"),
    "paths.sentence_embeddings.test": ("", "sentence vectors for test (blank: pooled)"),
    "ingest.min_tokens": ("5", "merge sentences with fewer alphabetic tokens"),
    "label.objective": ("f1", "greedy labeling objective: f1 or recall"),
    "label.max_selected": ("none", "cap on selected sentences per document"),
    "vocab.cap": ("50000", "vocabulary size cap"),
    "embeddings.miss_policy": ("zero", "vector for unknown words: zero or hash"),
    "graph.window": ("3", "sentence similarity window"),
    "graph.t_ss": ("0.6", "sentence similarity threshold"),
    "graph.t_ww": ("0.9", "word similarity threshold"),
    "graph.include_ns": ("true", "keep order edges"),
    "graph.include_ss": ("true", "keep sentence similarity edges"),
    "graph.include_ws": ("true", "keep word-in-sentence edges"),
    "graph.include_ww": ("true", "keep word similarity edges"),
    "graph.json_mirror": ("false", "also write a JSON mirror per graph"),
    "train.learning_rate": ("0.001", "Adam learning rate"),
    "train.batch_size": ("64", "graphs per optimizer step"),
    "train.max_epochs": ("20", "epoch cap"),
    "train.patience": ("7", "early-stop patience; none disables"),
    "train.dropout_keep": ("0.7", "keep probability after every layer"),
    "train.lambda_pos": ("auto", "initial positive-class weight; auto: neg/pos"),
    "train.lambda_neg": ("1.0", "negative-class weight"),
    "train.lambda_min": ("0.5", "positive-class weight floor"),
    "train.hidden": ("64", "hidden width"),
    "train.num_layers": ("2", "attention layers (1 or 2)"),
    "select.mode": ("threshold", "summary selection: threshold or topk"),
    "select.k": ("3", "sentences kept in topk mode"),
    "split": ("", "split for stats/infer/eval/calibrate (blank: per-command default)"),
    "ablate.max_epochs": ("0", "epoch cap per ablation variant; 0 inherits train.max_epochs"),
    "ablate.split": ("val", "split scored by the ablation report"),
    "calibrate.t_ss_grid": ("0.4,0.5,0.6,0.7,0.8", "sentence thresholds to sweep"),
    "calibrate.t_ww_grid": ("0.8,0.85,0.9,0.95", "word thresholds to sweep"),
    "calibrate.target_ws_share": ("0.82", "desired word-sentence share of all edges"),
    "calibrate.max_docs": ("50", "documents sampled per sweep point"),
    "out.dir": ("runs", "output directory"),
    "seed": ("0", "global seed"),
}

_TRUE = {"true", "1", "yes", "on"}
_FALSE = {"false", "0", "no", "off"}
_UNSET = {"", "none"}


def parse_assignment(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise UsageError(f"expected key=value, got {text!r}")
    key, _, value = text.partition("=")
    key = key.strip()
    value = value.strip()
    if not key:
        raise UsageError(f"empty key in {text!r}")
    if key not in KNOWN_KEYS:
        raise UsageError(f"unknown configuration key {key!r}")
    return key, value


class PipelineConfig:
    """Resolved configuration: defaults, file values, then overrides."""

    def __init__(self, values: dict[str, str] | None = None):
        self.values = {key: default for key, (default, _) in KNOWN_KEYS.items()}
        for key, value in (values or {}).items():
            if key not in KNOWN_KEYS:
                raise UsageError(f"unknown configuration key {key!r}")
            self.values[key] = value

    @classmethod
    def load(cls, path: str | Path | None, overrides: list[str] | None = None) -> "PipelineConfig":
        config = cls()
        if path is not None:
            path = Path(path)
            if not path.is_file():
                raise UsageError(f"config file not found: {path}")
            for line_no, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                try:
                    key, value = parse_assignment(line)
                except UsageError as exc:
                    raise UsageError(f"{path}:{line_no}: {exc}") from None
                config.values[key] = value
        for item in overrides or []:
            key, value = parse_assignment(item)
            config.values[key] = value
        return config

    def str_value(self, key: str) -> str:
        return self.values[key]

    def int_value(self, key: str) -> int:
        raw = self.values[key]
        try:
            return int(raw)
        except ValueError:
            raise UsageError(f"{key} must be an integer, got {raw!r}") from None

    def float_value(self, key: str) -> float:
        raw = self.values[key]
        try:
            return float(raw)
        except ValueError:
            raise UsageError(f"{key} must be a number, got {raw!r}") from None

    def bool_value(self, key: str) -> bool:
        raw = self.values[key].lower()
        if raw in _TRUE:
            return True
        if raw in _FALSE:
            return False
        raise UsageError(f"{key} must be a boolean, got {self.values[key]!r}")

    def optional_int(self, key: str) -> int | None:
        raw = self.values[key].lower()
        if raw in _UNSET:
            return None
        return self.int_value(key)

    def optional_float(self, key: str) -> float | None:
        raw = self.values[key].lower()
        if raw in _UNSET or raw == "auto":
            return None
        return self.float_value(key)

    def path_value(self, key: str) -> Path | None:
        raw = self.values[key]
        return Path(raw) if raw else None

    def existing_path(self, key: str) -> Path:
        path = self.path_value(key)
        if path is None:
            raise UsageError(f"{key} is required for this command")
        return path

    def float_list(self, key: str) -> list[float]:
        raw = self.values[key]
        try:
            items = [float(part) for part in raw.split(",") if part.strip()]
        except ValueError:
            raise UsageError(f"{key} must be comma-separated numbers, got {raw!r}") from None
        if not items:
            raise UsageError(f"{key} must list at least one number")
        return items

    def out_dir(self) -> Path:
        return Path(self.values["out.dir"])

    def split_or(self, default: str) -> str:
        split = self.values["split"] or default
        if split not in ("train", "val", "test"):
            raise UsageError(f"split must be train, val, or test, got {split!r}")
        return split

    def resolved_text(self) -> str:
        lines = [f"{key} = {self.values[key]}" for key in sorted(self.values)]
        return "\n".join(lines) + "\n"
