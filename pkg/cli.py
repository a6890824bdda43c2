# cli.py

"""Command-line entry point: python -m cli <command> [options]."""

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from core.candidate_engine import prepare_discussion
from core.config import load_config
from core.corpus import dump_discussions, filter_discussions, load_discussions
from core.cou_engine import export_csv, leave_one_out, majority_cou, ngram_baseline
from core.errors import CorpusValidationError, ModelMismatchError
from core.eval_engine import cross_validate
from core.feature_engine import fit_stats
from core.inference_engine import predict_corpus, write_predictions
from core.learning_engine import (
    label_space_for,
    labeled_for_training,
    samplerank_run,
    scorer_for,
    train_model,
    write_trace,
)
from core.rouge_engine import ROUGE_VARIANTS
from core.scoring_engine import load_model, save_model
from core.summary_engine import evaluate_summaries, summarize
from core.synth_engine import generate
from core.zip_builder import build_results_zip
from reports.workbook_builder import build_evaluation_workbook
from utils.logging_setup import configure_logging


logger = logging.getLogger("cli")


EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

TASK_ALIASES = {"phrase": "phrase", "discourse": "discourse", "summ": "summarization"}

ROUGE_PREFIXES = {"1": "rouge1_", "su4": "rougesu4_"}


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """argparse that reports usage problems as exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# =====================================================
# ARGUMENTS
# =====================================================

def _add_train_arguments(parser) -> None:

    group = parser.add_argument_group("training")
    group.add_argument("--mode", choices=("joint", "latent"))
    group.add_argument("--epochs", type=int)
    group.add_argument("--rounds", type=int)
    group.add_argument("--eta", type=float)
    group.add_argument("--alpha", type=float)
    group.add_argument("--runs", type=int)
    group.add_argument("--K", type=int)
    group.add_argument("--no-joint-features", action="store_true",
                       help="train without the phrase x relation features")


def _common_parser(top_level: bool) -> ArgumentParser:
    """
    Options accepted before or after the command name. Only the top-level
    copy carries defaults, so a subcommand never overwrites a value given
    before it.
    """

    def default(value):
        return value if top_level else argparse.SUPPRESS

    common = ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=default(False))
    common.add_argument("--config", default=default(None),
                        help="JSON file with train / summary / cou / synth sections")
    common.add_argument("--seed", type=int, default=default(None))
    common.add_argument("--jobs", type=int, default=default(None),
                        help="parallel training runs (default: available cores)")
    common.add_argument("--table", action="store_true", default=default(False),
                        help="print human-readable tables instead of JSON")
    common.add_argument("--min-units", type=int, default=default(1), help="drop discussions with fewer units")
    common.add_argument("--exclude-topic", action="append", default=default([]), metavar="TOPIC",
                        help="drop discussions with this topic label (repeatable)")

    return common


def build_parser() -> ArgumentParser:

    parser = ArgumentParser(
        prog="cli",
        description="Joint phrase selection and discourse relation toolkit",
        parents=[_common_parser(top_level=True)],
    )

    shared = [_common_parser(top_level=False)]
    commands = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    validate = commands.add_parser("validate", parents=shared, help="check a corpus file")
    validate.add_argument("corpus")

    train = commands.add_parser("train", parents=shared, help="train and save a model")
    train.add_argument("--corpus", required=True)
    train.add_argument("--out", required=True)
    train.add_argument("--trace", help="write a per-round SampleRank trace (TSV) of the first run")
    _add_train_arguments(train)

    infer = commands.add_parser("infer", parents=shared, help="decode a corpus with a saved model")
    infer.add_argument("--model", required=True)
    infer.add_argument("--corpus", required=True)
    infer.add_argument("--out", required=True)
    infer.add_argument("--decode", choices=("joint", "separate"), default="joint")
    infer.add_argument("--max-iters", type=int, default=10)

    evaluate = commands.add_parser("eval", parents=shared, help="cross-validate on a corpus")
    evaluate.add_argument("--corpus", required=True)
    evaluate.add_argument("--task", choices=tuple(TASK_ALIASES), default="phrase")
    evaluate.add_argument("--folds", type=int, default=5)
    evaluate.add_argument("--decode", choices=("joint", "separate"), default="joint")
    evaluate.add_argument("--reference", choices=("abstractive", "extractive"))
    evaluate.add_argument("--out", help="report JSON (default: stdout)")
    evaluate.add_argument("--bundle", help="ZIP with report, predictions and Excel workbook")
    _add_train_arguments(evaluate)

    summ = commands.add_parser("summarize", parents=shared, help="summaries and ROUGE for a saved model")
    summ.add_argument("--model", required=True)
    summ.add_argument("--corpus", required=True)
    summ.add_argument("--rouge", choices=tuple(ROUGE_VARIANTS), default="su4")
    summ.add_argument("--reference", choices=("abstractive", "extractive"))
    summ.add_argument("--out", help="summaries JSON (default: stdout)")

    cou = commands.add_parser("cou", parents=shared, help="consistency-of-understanding prediction")
    cou.add_argument("--corpus", required=True)
    cou.add_argument("--loo", action="store_true", help="leave-one-out evaluation (the only protocol)")
    cou.add_argument("--system", choices=("model", "ngram", "majority"), default="model")
    cou.add_argument("--feature-set", choices=("prob", "disc", "ent", "all"))
    cou.add_argument("--oracle", action="store_true", help="build test features from gold labels")
    cou.add_argument("--csv", help="export the held-out feature matrix")
    cou.add_argument("--out", help="report JSON (default: stdout)")
    _add_train_arguments(cou)

    synth = commands.add_parser("synth", parents=shared, help="generate a synthetic corpus")
    synth.add_argument("--spec", help="JSON file with a synth section (same layout as --config)")
    synth.add_argument("--out", required=True)
    synth.add_argument("--n-discussions", type=int)
    synth.add_argument("--cou", action="store_true", help="also plant COU labels")

    return parser


# =====================================================
# HELPERS
# =====================================================

def _train_config(args, config):

    overrides = {
        name: getattr(args, name)
        for name in ("mode", "epochs", "rounds", "eta", "alpha", "runs", "K")
        if getattr(args, name, None) is not None
    }

    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "no_joint_features", False):
        overrides["use_joint_features"] = False

    cfg = replace(config["train"], **overrides)

    return replace(cfg, jobs=args.jobs or cfg.jobs or os.cpu_count() or 1)


def _load_corpus(path, args):
    return filter_discussions(load_discussions(path), min_units=args.min_units, exclude_topics=args.exclude_topic)


def _emit(payload, out=None) -> None:

    text = json.dumps(payload, indent=2, sort_keys=True)

    if out:
        Path(out).write_text(text, encoding="utf-8")
        logger.info("wrote %s", out)
    else:
        print(text)


def _emit_report(report, args) -> None:

    if args.table:
        print(report.to_frame().to_string(index=False))
        if args.out:
            _emit(report.to_dict(), args.out)
    else:
        _emit(report.to_dict(), args.out)


def _load_model_with_stats(path):

    weights, stats = load_model(path)
    if stats is None:
        raise ModelMismatchError(f"model file {path} carries no corpus statistics")

    return weights, stats


# =====================================================
# COMMANDS
# =====================================================

def cmd_validate(args, config) -> int:

    discussions = load_discussions(args.corpus)
    print(f"ok: {len(discussions)} discussions")

    return EXIT_OK


def cmd_train(args, config) -> int:

    cfg = _train_config(args, config)
    prepared = [prepare_discussion(d) for d in _load_corpus(args.corpus, args)]

    labeled = labeled_for_training(prepared, cfg)

    stats = fit_stats(prepared)
    weights = train_model(labeled, cfg, stats=stats, progress=args.verbose)
    save_model(args.out, weights, stats)

    if args.trace:
        run = samplerank_run(labeled, cfg, scorer_for(cfg), stats=stats, labels=label_space_for(cfg), keep_trace=True)
        write_trace(run.trace, args.trace)

    return EXIT_OK


def cmd_infer(args, config) -> int:

    weights, stats = _load_model_with_stats(args.model)
    prepared = [prepare_discussion(d) for d in _load_corpus(args.corpus, args)]

    decoded = predict_corpus(prepared, weights, stats, decode_mode=args.decode, max_iters=args.max_iters)
    write_predictions(decoded, args.out)

    return EXIT_OK


def cmd_eval(args, config) -> int:

    cfg = _train_config(args, config)
    summary_cfg = config["summary"]
    if args.reference:
        summary_cfg = replace(summary_cfg, reference=args.reference)

    report = cross_validate(
        _load_corpus(args.corpus, args),
        cfg,
        folds=args.folds,
        decode_mode=args.decode,
        task=TASK_ALIASES[args.task],
        summary_cfg=summary_cfg,
        progress=args.verbose,
    )

    _emit_report(report, args)

    if args.bundle:
        bundle = build_results_zip({
            report.task: {"report": report, "workbook": build_evaluation_workbook(report)},
        })
        Path(args.bundle).write_bytes(bundle.getvalue())
        logger.info("wrote %s", args.bundle)

    return EXIT_OK


def cmd_summarize(args, config) -> int:

    summary_cfg = config["summary"]
    if args.reference:
        summary_cfg = replace(summary_cfg, reference=args.reference)

    weights, stats = _load_model_with_stats(args.model)
    prepared = [prepare_discussion(d) for d in _load_corpus(args.corpus, args)]
    decoded = predict_corpus(prepared, weights, stats)

    prefix = ROUGE_PREFIXES[args.rouge]
    metrics = {
        name: value
        for name, value in evaluate_summaries(decoded, stats, summary_cfg).items()
        if prefix in name or name.endswith("_length")
    }

    payload = {
        "rouge": args.rouge,
        "reference": summary_cfg.reference,
        "metrics": metrics,
        "summaries": {cache.prepared.id: summarize(cache.prepared, prediction) for cache, prediction in decoded},
    }

    if args.table:
        for name, value in sorted(metrics.items()):
            print(f"{name:40s} {value:.4f}")
    if args.out or not args.table:
        _emit(payload, args.out)

    return EXIT_OK


def cmd_cou(args, config) -> int:

    cou_cfg = config["cou"]
    if args.feature_set:
        cou_cfg = replace(cou_cfg, feature_set=args.feature_set)
    if args.oracle:
        cou_cfg = replace(cou_cfg, oracle=True)
    if args.seed is not None:
        cou_cfg = replace(cou_cfg, seed=args.seed)

    discussions = _load_corpus(args.corpus, args)

    if args.system == "majority":
        report = majority_cou(discussions)
    elif args.system == "ngram":
        report = ngram_baseline(discussions, cou_cfg)
    else:
        report = leave_one_out(discussions, _train_config(args, config), cou_cfg, progress=args.verbose)
        if args.csv:
            export_csv(report.predictions, args.csv)

    _emit_report(report, args)

    return EXIT_OK


def cmd_synth(args, config) -> int:

    spec = load_config(args.spec)["synth"] if args.spec else config["synth"]

    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.n_discussions is not None:
        overrides["n_discussions"] = args.n_discussions
    if args.cou:
        overrides["cou"] = True

    dump_discussions(generate(replace(spec, **overrides)), args.out)
    logger.info("wrote %s", args.out)

    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "train": cmd_train,
    "infer": cmd_infer,
    "eval": cmd_eval,
    "summarize": cmd_summarize,
    "cou": cmd_cou,
    "synth": cmd_synth,
}


def main(argv=None) -> int:

    parser = build_parser()

    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE

    configure_logging(logging.DEBUG if args.verbose else logging.INFO)

    try:
        config = load_config(args.config)
        return COMMANDS[args.command](args, config)

    except CorpusValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
