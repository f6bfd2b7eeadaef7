"""Command-line front end.

Commands cover the full pipeline: ingest, label, build-graphs, stats,
train, infer, eval, ablate, calibrate. Every command takes ``--config``
plus positional ``key=value`` overrides and the shared sampling flags.
Exit codes: 0 success, 1 usage problem, 2 data problem, 3 numeric
failure.

Heavy imports happen inside the command handlers so the thread cap
(``--threads`` or ``GRAPHLSS_THREADS``) is in place before the numeric
libraries initialize their pools.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from graphlss import __version__
from graphlss.config import PipelineConfig, UsageError
from graphlss.errors import DataError, NumericError

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
)


def apply_thread_limit(threads: int | None, deterministic: bool) -> None:
    if deterministic:
        threads = 1
    if threads is None:
        raw = os.environ.get("GRAPHLSS_THREADS", "")
        if not raw:
            return
        try:
            threads = int(raw)
        except ValueError:
            raise UsageError(f"GRAPHLSS_THREADS must be an integer, got {raw!r}") from None
    if threads < 1:
        raise UsageError(f"thread count must be positive, got {threads}")
    for var in _THREAD_VARS:
        os.environ[var] = str(threads)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", default=None, help="key=value configuration file")
    sub.add_argument(
        "overrides", nargs="*", metavar="key=value", help="configuration overrides"
    )
    sub.add_argument("--max-docs", type=int, default=None, help="cap documents processed")
    sub.add_argument(
        "--sample-seed",
        type=int,
        default=None,
        help="seeded random sample instead of taking the head",
    )
    sub.add_argument(
        "--skip-existing", action="store_true", help="skip work whose outputs already exist"
    )
    sub.add_argument("--threads", type=int, default=None, help="numeric thread cap")
    sub.add_argument(
        "--deterministic",
        action="store_true",
        help="single thread, fixed-order reductions, zeroed timings",
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="graphlss", description="heterogeneous-graph extractive summarizer")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)
    for name, handler, blurb in (
        ("ingest", _cmd_ingest, "clean and tokenize raw corpora"),
        ("label", _cmd_label, "attach greedy reference labels"),
        ("build-graphs", _cmd_build_graphs, "serialize document graphs"),
        ("stats", _cmd_stats, "summarize a graph directory"),
        ("train", _cmd_train, "train the attention classifier"),
        ("infer", _cmd_infer, "select summary sentences"),
        ("eval", _cmd_eval, "score summaries against references"),
        ("ablate", _cmd_ablate, "compare edge-type removals"),
        ("calibrate", _cmd_calibrate, "sweep similarity thresholds"),
    ):
        sub = commands.add_parser(name, help=blurb)
        _add_common(sub)
        sub.set_defaults(handler=handler)
    return parser


def _load(args) -> PipelineConfig:
    return PipelineConfig.load(args.config, args.overrides)


def _print_json(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _cmd_ingest(args) -> int:
    from graphlss import pipeline

    _print_json(pipeline.run_ingest(_load(args), args.max_docs, args.sample_seed, args.skip_existing))
    return 0


def _cmd_label(args) -> int:
    from graphlss import pipeline

    _print_json(pipeline.run_label(_load(args), args.max_docs, args.sample_seed, args.skip_existing))
    return 0


def _cmd_build_graphs(args) -> int:
    from graphlss import pipeline

    summary = pipeline.run_build_graphs(
        _load(args), args.max_docs, args.sample_seed, args.skip_existing
    )
    for split, stats_dict in summary.items():
        print(pipeline.stats_table(stats_dict, title=f"graph statistics: {split}"))
    return 0


def _cmd_stats(args) -> int:
    from graphlss import pipeline

    _, text = pipeline.run_stats(_load(args), args.max_docs, args.sample_seed)
    print(text)
    return 0


def _cmd_train(args) -> int:
    from graphlss import pipeline

    _print_json(pipeline.run_train(_load(args), args.max_docs, args.sample_seed, args.skip_existing))
    return 0


def _cmd_infer(args) -> int:
    from graphlss import pipeline

    _print_json(pipeline.run_infer(_load(args), args.max_docs, args.sample_seed, args.skip_existing))
    return 0


def _cmd_eval(args) -> int:
    from graphlss import pipeline

    eval_report, code = pipeline.run_eval(
        _load(args), args.max_docs, args.sample_seed, args.deterministic
    )
    _print_json(
        {
            "documents": eval_report["documents"],
            "corpus": eval_report["corpus"],
            "missing_doc_ids": eval_report["missing_doc_ids"],
        }
    )
    if eval_report["missing_doc_ids"]:
        print(
            "missing documents: " + ", ".join(eval_report["missing_doc_ids"]),
            file=sys.stderr,
        )
    return code


def _cmd_ablate(args) -> int:
    from graphlss import pipeline

    _, text = pipeline.run_ablate(_load(args), args.max_docs, args.sample_seed)
    print(text)
    return 0


def _cmd_calibrate(args) -> int:
    from graphlss import pipeline

    _, text = pipeline.run_calibrate(_load(args), args.max_docs, args.sample_seed)
    print(text)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        apply_thread_limit(args.threads, args.deterministic)
        return args.handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
