"""
Command-line entry point.

    creditstory generate --out data/ --seed 42
    creditstory parse    --input data/ --out data/parsed.jsonl
    creditstory story    --input data/ --out data/stories.jsonl
    creditstory featurize --input data/ --out data/features/
    creditstory train    --data data/ --version v6 --seed 42 --out model.json
    creditstory evaluate --model model.json --data data/ --split holdout --out report.json
    creditstory ablate   --data data/ --versions v1,v2,v3,v4,v5,v6 --out ablation.json

Exit codes: 0 success, 2 configuration, 3 I/O, 4 degenerate or malformed
data, 5 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys

import numpy as np

from .bureau import RecordError, customer_to_dict
from .dataset import build_examples, read_corpus
from .labeling import PARTITIONS, SplitSpec, build_manifest, read_manifest, split, write_manifest
from .lexicon import extract_vocabulary
from .metrics import DegenerateLabels
from .model import NonFiniteLoss, TrainConfig
from .pipeline import RiskModel, evaluate, fit, format_ablation, get_preset, run_ablation
from .story import DEFAULT_RULES, story_record
from .synthgen import ConfigInvalid, GeneratorConfig, generate, write_corpus
from .temporal import FEATURE_NAMES

logger = logging.getLogger("creditstory")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}", EXIT_CONFIG) from None
    except json.JSONDecodeError as exc:
        raise CliError(f"config {path} is not valid JSON: {exc}", EXIT_CONFIG) from None
    if not isinstance(cfg, dict):
        raise CliError(f"config {path} must hold a JSON object", EXIT_CONFIG)
    return cfg


def _write_json(obj, path) -> None:
    try:
        d = os.path.dirname(os.path.abspath(path))
        os.makedirs(d, exist_ok=True)
        with open(path, "w") as fh:
            json.dump(obj, fh, indent=1, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from None


def _echo(args, extra=None) -> dict:
    echo = {k: v for k, v in vars(args).items() if k not in ("func", "verbose")}
    if extra:
        echo.update(extra)
    return echo


def _read_files(path):
    try:
        return read_corpus(path)
    except FileNotFoundError as exc:
        raise CliError(str(exc), EXIT_IO) from None
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from None
    except RecordError as exc:
        raise CliError(f"malformed bureau data in {path}: {exc}", EXIT_DATA) from None


def _manifest_path(data_dir):
    path = os.path.join(data_dir, "manifest.json")
    if not os.path.exists(path):
        raise CliError(f"missing manifest: {path}", EXIT_CONFIG)
    return path


def _partitions(data_dir):
    manifest = read_manifest(_manifest_path(data_dir))
    examples = {ex.customer_id: ex for ex in build_examples(_read_files(data_dir))}
    try:
        return manifest, {name: [examples[c] for c in manifest["partitions"][name]] for name in PARTITIONS}
    except KeyError as exc:
        raise CliError(f"manifest does not match corpus: {exc}", EXIT_CONFIG) from None


def _train_config(args) -> TrainConfig:
    overrides = _load_config(args.config)
    # a train echo nests the training settings; accept it for replays
    overrides = dict(overrides.get("train_config", overrides))
    overrides.pop("seed", None)
    fields = {f.name for f in dataclasses.fields(TrainConfig)}
    unknown = set(overrides) - fields
    if unknown:
        raise CliError(f"unknown training config keys {sorted(unknown)}", EXIT_CONFIG)
    cfg = TrainConfig(**overrides)
    if args.max_epochs is not None:
        cfg = dataclasses.replace(cfg, max_epochs=args.max_epochs)
    return cfg


# --------------------------------------------------------------------------
# commands


def cmd_generate(args) -> int:
    raw = _load_config(args.config)
    raw.pop("calibrated_intercept", None)  # output-only key of the config echo
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.n is not None:
        raw["n_customers"] = args.n
    if args.scenario is not None:
        raw["scenario"] = args.scenario
    try:
        cfg = GeneratorConfig.from_dict(raw)
    except (ConfigInvalid, ValueError) as exc:
        raise CliError(f"invalid generator config: {exc}", EXIT_CONFIG) from None
    files, truth = generate(cfg)
    try:
        write_corpus(args.out, files, truth, cfg)
    except OSError as exc:
        raise CliError(f"cannot write corpus to {args.out}: {exc}", EXIT_IO) from None
    spec = SplitSpec(cutoff=cfg.cutoff, seed=cfg.seed)
    parts = split(files, spec)
    labels = dict(zip(truth.customer_id, truth.label))
    manifest = build_manifest(parts, spec, labels)
    write_manifest(manifest, os.path.join(args.out, "manifest.json"))
    logger.info("wrote %d customers to %s (labeled event rate %.4f)",
                len(files), args.out, manifest["labeled_event_rate"])
    return EXIT_OK


def cmd_parse(args) -> int:
    files = _read_files(args.input)
    try:
        with open(args.out, "w") as fh:
            for cf in files:
                fh.write(json.dumps(customer_to_dict(cf), sort_keys=True) + "\n")
    except OSError as exc:
        raise CliError(f"cannot write {args.out}: {exc}", EXIT_IO) from None
    _write_json(_echo(args), args.out + ".config.json")
    return EXIT_OK


def cmd_story(args) -> int:
    files = _read_files(args.input)
    try:
        with open(args.out, "w") as fh:
            for cf in files:
                fh.write(json.dumps(story_record(cf, DEFAULT_RULES)) + "\n")
    except OSError as exc:
        raise CliError(f"cannot write {args.out}: {exc}", EXIT_IO) from None
    _write_json(_echo(args), args.out + ".config.json")
    return EXIT_OK


def cmd_featurize(args) -> int:
    examples = build_examples(_read_files(args.input))
    vocab = extract_vocabulary(DEFAULT_RULES, [t for ex in examples for t in ex.stories.values()])
    try:
        os.makedirs(args.out, exist_ok=True)
        vocab.save(os.path.join(args.out, "vocab.txt"))
        with open(os.path.join(args.out, "features.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["customer_id", *FEATURE_NAMES, "label"])
            for ex in examples:
                w.writerow([ex.customer_id, *(repr(float(v)) for v in ex.temporal),
                            "" if ex.label is None else ex.label])
    except OSError as exc:
        raise CliError(f"cannot write features to {args.out}: {exc}", EXIT_IO) from None
    _write_json(_echo(args), os.path.join(args.out, "featurize.config.json"))
    return EXIT_OK


def cmd_train(args) -> int:
    try:
        preset = get_preset(args.version)
    except KeyError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None
    cfg = _train_config(args)
    manifest, parts = _partitions(args.data)
    seed = args.seed if args.seed is not None else manifest["seed"]
    model, log = fit(preset, parts["train"], parts["validation"], seed, cfg)
    model.save(args.out)
    _write_json(log.to_dict(), args.out + ".log.json")
    _write_json(_echo(args, {"seed": seed, "train_config": dataclasses.asdict(cfg)}), args.out + ".config.json")
    for row in log.epochs:
        logger.info("%s", json.dumps(row, sort_keys=True))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    if args.split not in PARTITIONS:
        raise CliError(f"split must be one of {PARTITIONS}", EXIT_CONFIG)
    try:
        model = RiskModel.load(args.model)
    except OSError as exc:
        raise CliError(f"cannot read model {args.model}: {exc}", EXIT_IO) from None
    except (ValueError, KeyError) as exc:
        raise CliError(f"bad model file {args.model}: {exc}", EXIT_CONFIG) from None
    _, parts = _partitions(args.data)
    train_lab = [ex for ex in parts["train"] if ex.label is not None]
    report = evaluate(model, parts[args.split], model.score(train_lab))
    if report.auc is None:
        raise CliError(f"split {args.split} has degenerate labels", EXIT_DATA)
    out = {"split": args.split, "version": model.preset.name, **report.to_dict()}
    if args.out:
        _write_json(out, args.out)
        _write_json(_echo(args), args.out + ".config.json")
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


def cmd_ablate(args) -> int:
    cfg = _train_config(args)
    manifest, parts = _partitions(args.data)
    seed = args.seed if args.seed is not None else manifest["seed"]
    versions = [v.strip() for v in args.versions.split(",") if v.strip()]
    report = run_ablation(parts, versions, seed, cfg)
    if args.out:
        _write_json({"seed": seed, "versions": versions, "rows": list(report.values())}, args.out)
        _write_json(_echo(args, {"seed": seed}), args.out + ".config.json")
    print(format_ablation(report))
    if all(row.get("error") for row in report.values()):
        return 1
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="creditstory", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
        p.add_argument("--config", help="JSON config; flags override its keys")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", required=out_required)

    p = sub.add_parser("generate", help="write a synthetic LNB corpus, truth table and manifest")
    common(p)
    p.add_argument("--n", type=int, help="number of customers")
    p.add_argument("--scenario", choices=["default", "temporal-heavy"])
    p.set_defaults(func=cmd_generate)

    for name, func, helptext in (("parse", cmd_parse, "LNB shards -> JSONL"),
                                 ("story", cmd_story, "LNB shards -> credit stories JSONL"),
                                 ("featurize", cmd_featurize, "temporal features CSV + vocabulary")):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.add_argument("--input", required=True, help="data directory or directory of .lnb shards")
        p.set_defaults(func=func)

    p = sub.add_parser("train", help="fit one version preset")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--version", default="v6")
    p.add_argument("--max-epochs", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="metrics report for one split")
    common(p, out_required=False)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="holdout")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="train and evaluate several versions")
    common(p, out_required=False)
    p.add_argument("--data", required=True)
    p.add_argument("--versions", default="v1,v2,v3,v4,v5,v6")
    p.add_argument("--max-epochs", type=int)
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except DegenerateLabels as exc:
        print(f"error: degenerate labels: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NonFiniteLoss, FloatingPointError) as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
