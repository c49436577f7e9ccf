"""Command-line surface: synth, train, predict, evaluate, augment,
features dump, and explain.

Exit codes: 0 success, 1 usage error, 2 data/config error.  All randomness
flows from --seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import augment as augment_mod
from . import ingest
from .errors import DcomError
from .explain import feature_importance
from .features import FEATURE_NAMES, extract_features
from .infer import evaluate, predict_kvote, predict_one
from .serialize import load_bundle, save_bundle
from .train import TrainingConfig, train_model

CONFIG_VERSION = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_scalar(text: str):
    text = text.strip()
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        return [_parse_scalar(p) for p in inner.split(",")] if inner else []
    if text.startswith('"') and text.endswith('"') and len(text) >= 2:
        return text[1:-1]
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_config_file(path) -> TrainingConfig:
    """Flat key = value config (TOML-style scalars, '#' comments).

    Requires config_version = 1; unknown keys are rejected.
    """
    raw = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DcomError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            raw[key.strip()] = _parse_scalar(value)
    version = raw.pop("config_version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise DcomError(f"unsupported config_version {version}")
    return TrainingConfig.from_dict(raw)


def _load_data(path):
    return ingest.load_dataset(path, format=ingest.guess_format(path))


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads (1 keeps runs reproducible)")


def _cmd_synth(args):
    spec = ingest.DEFAULT_CLASS_SPEC
    if args.classes:
        spec = {}
        for name in args.classes.split(","):
            name = name.strip()
            generator = name if name in ingest.GENERATORS else f"{name}_numbers"
            spec[name] = generator
    instances = ingest.generate_synthetic_corpus(spec, args.n_per_class, seed=args.seed)
    ingest.save_jsonl(instances, args.out)
    print(f"wrote {len(instances)} columns to {args.out}")
    return 0


def _cmd_train(args):
    instances, _ = _load_data(args.data)
    config = parse_config_file(args.config) if args.config else TrainingConfig()
    if args.split:
        split = ingest.DatasetSplit.load(args.split)
    else:
        split = ingest.make_split(
            len(instances), seed=args.seed,
            stratify_labels=[i.label for i in instances],
        )
    if args.split_out:
        split.save(args.split_out)
    log_path = args.log or (args.out + ".epochs.csv")
    with open(log_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_accuracy", "val_f1",
                         "learning_rate", "wall_time_s"])
        def log(report):
            writer.writerow([report.epoch, f"{report.train_loss:.6f}",
                             f"{report.val_accuracy:.4f}", f"{report.val_f1:.4f}",
                             f"{report.learning_rate:.2e}", f"{report.wall_time_s:.2f}"])
            fh.flush()
            print(f"epoch {report.epoch}: loss {report.train_loss:.4f} "
                  f"val_f1 {report.val_f1:.4f} lr {report.learning_rate:.2e}")
        bundle, reports = train_model(instances, split, config, seed=args.seed,
                                      log_callback=log)
    save_bundle(bundle, args.out)
    best = bundle.metadata["best_val_f1"]
    print(f"saved {args.out} (best val F1 {best:.4f} over {len(reports)} epochs)")
    return 0


def _cmd_predict(args):
    bundle = load_bundle(args.model)
    instances, _ = _load_data(args.data)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for i, inst in enumerate(instances):
            if args.k > 1:
                pred = predict_kvote(bundle, inst, k=args.k,
                                     seed=np.random.default_rng([args.seed, i]).integers(2**63))
            else:
                pred = predict_one(bundle, inst,
                                   seed=np.random.default_rng([args.seed, i]).integers(2**63))
            record = {
                "source": i,
                "label": pred.label,
                "confidence": float(pred.probabilities.max()),
                "votes": pred.votes,
            }
            out.write(json.dumps(record, ensure_ascii=False) + "\n")
    finally:
        if args.out:
            out.close()
    return 0


def _cmd_evaluate(args):
    bundle = load_bundle(args.model)
    instances, _ = _load_data(args.data)
    split = ingest.DatasetSplit.load(args.split)
    report = evaluate(bundle, instances, split.test, k=args.k, seed=args.seed,
                      bundle_path=args.model)
    text = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if args.table:
        with open(args.table, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["class", "precision", "recall",
                                                    "f1", "support"])
            writer.writeheader()
            writer.writerows(report["per_class"])
    return 0


def _cmd_augment(args):
    instances, _ = _load_data(args.data)
    rng = np.random.default_rng(args.seed)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for i, inst in enumerate(instances):
            if args.mode == "single":
                s = augment_mod.sample_single(inst, rng, source=i)
                record = {"source": i, "r": s.r, "text": s.text}
            else:
                s = augment_mod.sample_multi(inst, args.r, args.multi_mode, rng, source=i)
                record = {"source": i, "r": args.r, "texts": list(s.texts),
                          "mask": [int(m) for m in s.pad_mask]}
            out.write(json.dumps(record, ensure_ascii=False) + "\n")
    finally:
        if args.out:
            out.close()
    return 0


def _cmd_features(args):
    if args.action != "dump":
        raise UsageError(f"unknown features action {args.action!r}")
    instances, _ = _load_data(args.data)
    out = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(("source", "label") + FEATURE_NAMES)
        for i, inst in enumerate(instances):
            row = extract_features(inst)
            writer.writerow([i, inst.label or ""] + [repr(float(v)) for v in row])
    finally:
        if args.out:
            out.close()
    return 0


def _cmd_explain(args):
    bundle = load_bundle(args.model)
    report = feature_importance(bundle, use_labels=args.labels)
    print(report.format_table())
    if args.csv:
        report.write_csv(args.csv)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="dcom", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n-per-class", type=int, default=100)
    p.add_argument("--classes", help="comma-separated generator names")
    _add_common(p)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--data", required=True)
    p.add_argument("--config", help="key = value training config file")
    p.add_argument("--out", required=True, help="bundle output path (.dcom)")
    p.add_argument("--split", help="existing split manifest JSON")
    p.add_argument("--split-out", help="write the split manifest here")
    p.add_argument("--log", help="epoch report CSV (default <out>.epochs.csv)")
    _add_common(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="predict labels for a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.add_argument("--k", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="metrics report on a test split")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--out", help="metrics JSON path (default stdout)")
    p.add_argument("--table", help="per-class CSV path")
    _add_common(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("augment", help="stream constructed samples as JSONL")
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=("single", "multi"), default="single")
    p.add_argument("--r", type=int, default=45)
    p.add_argument("--multi-mode", choices=("pad", "with_replacement"), default="pad")
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("features", help="engineered-feature utilities")
    p.add_argument("action", choices=("dump",))
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("explain", help="feature-importance report")
    p.add_argument("--model", required=True)
    p.add_argument("--csv", help="also write the report as CSV")
    p.add_argument("--labels", action="store_true",
                   help="use long feature labels instead of short names")
    _add_common(p)
    p.set_defaults(func=_cmd_explain)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except DcomError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
