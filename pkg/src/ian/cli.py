"""Command-line entry point.

Subcommands: stats, train, eval, predict, gradcheck, attention-viz.
Every subcommand accepts --config FILE, a flat key=value text file whose
values fill in any flag not given on the command line (explicit flags
win).  All randomness is keyed to --seed, so a command is deterministic
given its flags, files and seed.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .data import (
    AspectTerm,
    Dataset,
    Instance,
    RawReview,
    build_instances,
    build_vocab,
    dataset_stats,
    dump_instances,
    load_reviews,
    render_stats,
    tokenize,
)
from .embeddings import load_pretrained
from .evaluate import evaluate_model, render_report, reports_tsv
from .gradcheck import GROUPS, check_tiny_model
from .model import (
    LABELS,
    VARIANTS,
    ModelParams,
    load_checkpoint,
    predict_index,
    save_checkpoint,
)
from .numerics import Rng
from .training import TrainConfig, train
from .viz import write_attention_files

# keys accepted in a --config file; each mirrors a command-line flag
CONFIG_KEYS = frozenset(
    (
        "data_dir",
        "category",
        "split",
        "variant",
        "tie_attention",
        "embed_dim",
        "hidden_dim",
        "epochs",
        "learning_rate",
        "momentum",
        "l2",
        "dropout",
        "batch_size",
        "seed",
        "clip_norm",
        "freeze_embeddings",
        "shuffle",
        "embeddings_path",
        "checkpoint",
        "history",
        "out_dir",
    )
)

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def read_config_file(path: str) -> dict:
    """Flat key=value file; blank lines and # comments ignored."""
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            cfg[key] = value
    return cfg


def _as_bool(value, key):
    if isinstance(value, bool):
        return value
    lowered = str(value).lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ValueError(f"config key {key} expects a boolean, got {value!r}")


def _as_optional_float(value, key):
    if value is None or str(value).lower() == "none":
        return None
    return float(value)


class Settings:
    """Resolved configuration: flag > config file > default."""

    def __init__(self, args):
        self._args = args
        self._file = read_config_file(args.config) if getattr(args, "config", None) else {}

    def get(self, key, default=None, cast=None):
        value = getattr(self._args, key, None)
        if value is None:
            value = self._file.get(key, default)
        if value is None:
            return None
        if cast is bool:
            return _as_bool(value, key)
        if cast is not None and not isinstance(value, cast):
            return cast(value)
        return value

    def optional_float(self, key, default=None):
        value = getattr(self._args, key, None)
        if value is None:
            value = self._file.get(key, default)
        return _as_optional_float(value, key)


def _load_pair(category: str, data_dir):
    """Both splits of a category with a shared transductive vocabulary,
    plus per-split build reports and offset-realignment counts."""
    train_reviews, train_realigned = load_reviews(category, "train", data_dir)
    test_reviews, test_realigned = load_reviews(category, "test", data_dir)
    vocab = build_vocab([train_reviews, test_reviews])
    train_instances, train_report = build_instances(train_reviews, vocab)
    test_instances, test_report = build_instances(test_reviews, vocab)
    return (
        Dataset(train_instances, vocab, "train", category),
        Dataset(test_instances, vocab, "test", category),
        {"train": (train_report, train_realigned), "test": (test_report, test_realigned)},
    )


# --- stats ---------------------------------------------------------------


def cmd_stats(args) -> int:
    cfg = Settings(args)
    data_dir = cfg.get("data_dir")
    which = cfg.get("category", "both")
    categories = ("restaurant", "laptop") if which == "both" else (which,)
    dump_dir = args.dump_dir
    for category in categories:
        train_ds, test_ds, reports = _load_pair(category, data_dir)
        for ds in (train_ds, test_ds):
            print(render_stats(dataset_stats(ds)))
            report, realigned = reports[ds.split]
            notes = []
            if report.dropped_conflict:
                notes.append(f"dropped {report.dropped_conflict} conflict")
            if report.dropped_unlocatable or report.dropped_empty:
                notes.append(
                    f"dropped {report.dropped_unlocatable + report.dropped_empty} unlocatable/empty"
                )
            if report.span_fallbacks:
                notes.append(f"{report.span_fallbacks} span fallbacks")
            if realigned:
                notes.append(f"{realigned} offsets realigned")
            if notes:
                print("  note  " + ", ".join(notes))
            if dump_dir:
                os.makedirs(dump_dir, exist_ok=True)
                path = os.path.join(dump_dir, f"{category}_{ds.split}.txt")
                with open(path, "w", encoding="utf-8") as fh:
                    fh.write(dump_instances(ds.instances))
                print(f"  wrote {path}")
    return 0


# --- train ---------------------------------------------------------------


def _write_history(history, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# epoch\tloss\ttrain_acc\teval_acc\n")
        for entry in history:
            eval_acc = entry.get("eval_acc")
            fh.write(
                f"{entry['epoch']}\t{entry['loss']:.6f}\t{entry['train_acc']:.6f}"
                f"\t{'' if eval_acc is None else f'{eval_acc:.6f}'}\n"
            )


def cmd_train(args) -> int:
    cfg = Settings(args)
    category = cfg.get("category", "restaurant")
    seed = cfg.get("seed", 0, int)
    out_dir = cfg.get("out_dir", ".")
    variant = cfg.get("variant", "ian")
    embed_dim = cfg.get("embed_dim", 300, int)
    hidden_dim = cfg.get("hidden_dim", 300, int)
    tie = cfg.get("tie_attention", False, bool)

    train_ds, test_ds, _ = _load_pair(category, cfg.get("data_dir"))
    print(
        f"{category}: {len(train_ds.instances)} train / {len(test_ds.instances)} test "
        f"instances, vocabulary {len(train_ds.vocab)}"
    )

    rng = Rng(seed)
    table = None
    emb_path = cfg.get("embeddings_path")
    if emb_path and variant != "majority":
        table, hits, misses = load_pretrained(emb_path, train_ds.vocab, embed_dim, rng)
        print(f"pretrained vectors: {hits} hits, {misses} misses")
    params = ModelParams(
        rng,
        train_ds.vocab,
        variant=variant,
        embed_dim=embed_dim,
        hidden_dim=hidden_dim,
        tie_attention=tie,
        embeddings=table,
    )
    config = TrainConfig(
        epochs=cfg.get("epochs", 25, int),
        learning_rate=cfg.get("learning_rate", 0.01, float),
        momentum=cfg.get("momentum", 0.9, float),
        l2=cfg.get("l2", 1e-5, float),
        dropout=cfg.get("dropout", 0.5, float),
        batch_size=cfg.get("batch_size", 32, int),
        seed=seed,
        clip_norm=cfg.optional_float("clip_norm"),
        freeze_embeddings=cfg.get("freeze_embeddings", False, bool),
        variant=variant,
        tie_attention=tie,
        shuffle=cfg.get("shuffle", True, bool),
    )
    history = train(
        params, train_ds.instances, config, rng,
        eval_instances=test_ds.instances, log=print,
    )

    os.makedirs(out_dir, exist_ok=True)
    history_path = cfg.get("history") or os.path.join(out_dir, "history.txt")
    _write_history(history, history_path)
    checkpoint_path = cfg.get("checkpoint") or os.path.join(out_dir, "model.npz")
    save_checkpoint(
        checkpoint_path,
        params,
        config={
            "category": category,
            "variant": variant,
            "epochs": config.epochs,
            "learning_rate": config.learning_rate,
            "momentum": config.momentum,
            "l2": config.l2,
            "dropout": config.dropout,
            "batch_size": config.batch_size,
            "seed": seed,
            "clip_norm": config.clip_norm,
            "freeze_embeddings": config.freeze_embeddings,
            "tie_attention": tie,
            "embed_dim": embed_dim,
            "hidden_dim": hidden_dim,
        },
    )
    print(f"wrote {checkpoint_path} and {history_path}")

    report = evaluate_model(params, test_ds.instances, dataset=f"{category} test")
    print(render_report(report))
    return 0


# --- eval / predict ------------------------------------------------------


def _instances_for_checkpoint(params, reviews):
    """Instances for scoring against a fixed checkpoint vocabulary.

    Unknown tokens are dropped (with span remapping).  The majority variant
    stores no vocabulary, so a throwaway one is built from the reviews —
    its prediction ignores the token ids entirely.
    """
    if params.embeddings is None:
        vocab = build_vocab([reviews])
        return build_instances(reviews, vocab)
    return build_instances(reviews, params.vocab, drop_unknown=True)


def cmd_eval(args) -> int:
    cfg = Settings(args)
    params, meta = load_checkpoint(args.checkpoint)
    category = cfg.get("category") or meta.get("config", {}).get("category", "restaurant")
    split = cfg.get("split", "test")
    reviews, _ = load_reviews(category, split, cfg.get("data_dir"))
    instances, report = _instances_for_checkpoint(params, reviews)
    dropped = report.dropped_unlocatable + report.dropped_empty
    if dropped:
        print(f"note: {dropped} instances dropped during encoding", file=sys.stderr)
    result = evaluate_model(params, instances, dataset=f"{category} {split}")
    print(render_report(result))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(reports_tsv([result]))
        print(f"wrote {args.out}")
    return 0


def _instance_from_line(sentence, target, vocab, drop_unknown, gold=None):
    """Build the single instance for one predict-input line, or None."""
    start = sentence.find(target)
    if start < 0:
        start = sentence.lower().find(target.lower())
    end = start + len(target) if start >= 0 else 0
    start = max(start, 0)
    review = RawReview(
        text=sentence,
        terms=[AspectTerm(text=target, start=start, end=end, polarity=gold)],
    )
    instances, _ = build_instances([review], vocab, drop_unknown=drop_unknown)
    return instances[0] if instances else None


def cmd_predict(args) -> int:
    params, _ = load_checkpoint(args.checkpoint)
    drop_unknown = params.embeddings is not None
    out = sys.stdout if args.output in (None, "-") else open(args.output, "w", encoding="utf-8")
    failures = 0
    golds, preds = [], []
    try:
        with open(args.input, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) not in (2, 3) or not parts[0].strip() or not parts[1].strip():
                    print(
                        f"warning: line {lineno}: expected sentence<TAB>target"
                        "[<TAB>gold]",
                        file=sys.stderr,
                    )
                    out.write("?\n")
                    failures += 1
                    continue
                sentence, target = parts[0], parts[1]
                gold = parts[2].strip() if len(parts) == 3 else None
                if gold is not None and gold not in LABELS:
                    print(
                        f"warning: line {lineno}: unknown gold label {gold!r}",
                        file=sys.stderr,
                    )
                    out.write("?\n")
                    failures += 1
                    continue
                vocab = params.vocab if drop_unknown else build_vocab(
                    [[RawReview(sentence, [])]]
                )
                if not drop_unknown:
                    for tok in tokenize(target):
                        vocab.add(tok)
                inst = _instance_from_line(sentence, target, vocab, drop_unknown, gold)
                if inst is None:
                    print(
                        f"warning: line {lineno}: target {target!r} not usable "
                        "in this sentence",
                        file=sys.stderr,
                    )
                    out.write("?\n")
                    failures += 1
                    continue
                pred = predict_index(params, inst.context_ids, inst.target_ids, inst.span)
                out.write(LABELS[pred] + "\n")
                if gold is not None and inst.label is not None:
                    golds.append(inst.label)
                    preds.append(pred)
    finally:
        if out is not sys.stdout:
            out.close()
    if golds:
        correct = sum(p == g for p, g in zip(preds, golds))
        print(f"gold given for {len(golds)} lines: accuracy {correct / len(golds):.4f}")
    return 1 if failures else 0


# --- gradcheck -----------------------------------------------------------


def cmd_gradcheck(args) -> int:
    if (args.embed_dim is None) != (args.hidden_dim is None):
        print("error: give both --embed-dim and --hidden-dim or neither", file=sys.stderr)
        return 2
    if args.embed_dim is None:
        dims = ((3, 3), (8, 8))
    else:
        dims = ((args.embed_dim, args.hidden_dim),)
    ok = True
    for embed_dim, hidden_dim in dims:
        details = {}
        errors, elapsed = check_tiny_model(
            args.seed,
            embed_dim,
            hidden_dim,
            n_ctx=args.ctx_len,
            n_tgt=args.tgt_len,
            variant=args.variant,
            tie_attention=args.tie_attention,
            l2=args.l2,
            eps=args.eps,
            corrupt_group=args.corrupt_group,
            details=details,
        )
        for group in GROUPS:
            if group not in errors:
                continue  # variant without this component
            err = errors[group]
            passed = err <= args.tolerance
            status = "ok" if passed else "FAIL"
            line = (
                f"d_e={embed_dim} d_h={hidden_dim}  {group:<11} "
                f"max rel err {err:.3e}  {status}"
            )
            if not passed:
                name, idx, analytic, numeric = details[group]
                line += (
                    f"  worst {name}[{','.join(str(int(i)) for i in idx)}]"
                    f" analytic {analytic:.6e} vs numeric {numeric:.6e}"
                )
                ok = False
            print(line)
        print(f"d_e={embed_dim} d_h={hidden_dim}  elapsed {elapsed:.2f}s")
    return 0 if ok else 1


# --- attention-viz -------------------------------------------------------


def cmd_attention_viz(args) -> int:
    params, _ = load_checkpoint(args.checkpoint)
    if params.embeddings is None:
        print("error: this checkpoint variant has no attention to visualize",
              file=sys.stderr)
        return 1
    sentence, target = args.sentence, args.target
    if args.span:
        try:
            start, end = (int(p) for p in args.span.split(":"))
        except ValueError:
            print("error: --span expects START:END token positions", file=sys.stderr)
            return 2
        tokens = tokenize(sentence)
        if not (0 <= start < end <= len(tokens)):
            print(f"error: span {start}:{end} outside the {len(tokens)}-token sentence",
                  file=sys.stderr)
            return 2
        kept = [t for t in tokens if t in params.vocab]
        if kept != tokens:
            print("error: --span cannot be combined with unknown tokens; "
                  "ids would shift", file=sys.stderr)
            return 2
        ids = tuple(int(i) for i in params.vocab.encode(tokens))
        tgt_tokens = tuple(tokens[start:end])
        inst = Instance(
            context_tokens=tuple(tokens),
            target_tokens=tgt_tokens,
            context_ids=ids,
            target_ids=ids[start:end],
            span=(start, end),
            label=None,
            target_text=" ".join(tgt_tokens),
        )
    else:
        inst = _instance_from_line(sentence, target, params.vocab, True)
        if inst is None:
            print(
                f"error: target {target!r} not found in the sentence; "
                "pass --span START:END (token positions)",
                file=sys.stderr,
            )
            return 1
        n_dropped = len(tokenize(sentence)) - len(inst.context_tokens)
        if n_dropped:
            print(
                f"note: {n_dropped} tokens unknown to the checkpoint "
                "vocabulary were dropped",
                file=sys.stderr,
            )
    paths, predicted = write_attention_files(args.out_dir, params, inst,
                                             basename=args.basename)
    print(f"predicted: {predicted}")
    for ext in ("svg", "html", "txt"):
        print(f"wrote {paths[ext]}")
    return 0


# --- parser --------------------------------------------------------------


def _add_config_flags(sub):
    sub.add_argument("--config", help="flat key=value config file")
    sub.add_argument("--data-dir", dest="data_dir",
                     help="directory with the corpus XML files "
                          "(default: $SEMEVAL_DATA_DIR, else bundled fixtures)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ian",
        description="Aspect-level sentiment classifier with interacting "
                    "context/target attention, built on plain numpy.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("stats", help="dataset polarity and target-length tables")
    _add_config_flags(p)
    p.add_argument("--category", choices=("restaurant", "laptop", "both"))
    p.add_argument("--dump-dir", help="also write canonical instance dumps here")
    p.set_defaults(func=cmd_stats)

    p = subs.add_parser("train", help="train a variant and write checkpoint + history")
    _add_config_flags(p)
    p.add_argument("--category", choices=("restaurant", "laptop"))
    p.add_argument("--variant", choices=VARIANTS)
    p.add_argument("--tie-attention", action=argparse.BooleanOptionalAction,
                   dest="tie_attention", default=None)
    p.add_argument("--embed-dim", dest="embed_dim", type=int)
    p.add_argument("--hidden-dim", dest="hidden_dim", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--l2", type=float)
    p.add_argument("--dropout", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--clip-norm", dest="clip_norm", type=float)
    p.add_argument("--freeze-embeddings", action=argparse.BooleanOptionalAction,
                   dest="freeze_embeddings", default=None)
    p.add_argument("--no-shuffle", action="store_const", const=False, dest="shuffle",
                   default=None)
    p.add_argument("--embeddings", dest="embeddings_path",
                   help="pretrained word-vector text file")
    p.add_argument("--checkpoint", help="output checkpoint path (default out_dir/model.npz)")
    p.add_argument("--history", help="output history path (default out_dir/history.txt)")
    p.add_argument("--out-dir", dest="out_dir")
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("eval", help="score a checkpoint on a data split")
    _add_config_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--category", choices=("restaurant", "laptop"))
    p.add_argument("--split", choices=("train", "test"))
    p.add_argument("--out", help="also write a machine-readable TSV report here")
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("predict", help="label sentence<TAB>target lines from a file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True,
                   help="one record per line: sentence<TAB>target[<TAB>gold]")
    p.add_argument("--output", help="output file (default stdout)")
    p.set_defaults(func=cmd_predict)

    p = subs.add_parser("gradcheck",
                        help="finite-difference check of the backward pass")
    p.add_argument("--embed-dim", dest="embed_dim", type=int,
                   help="default: run both 3 and 8")
    p.add_argument("--hidden-dim", dest="hidden_dim", type=int)
    p.add_argument("--seed", type=int, default=27)
    p.add_argument("--ctx-len", dest="ctx_len", type=int, default=4)
    p.add_argument("--tgt-len", dest="tgt_len", type=int, default=2)
    p.add_argument("--variant", choices=[v for v in VARIANTS if v != "majority"],
                   default="ian")
    p.add_argument("--tie-attention", action="store_true", dest="tie_attention")
    p.add_argument("--l2", type=float, default=0.01,
                   help="penalty used during the check; keeps every weight "
                        "gradient well above finite-difference noise")
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--corrupt-group", dest="corrupt_group", choices=GROUPS,
                   help="deliberately scale one group's analytic gradients "
                        "(self-test of the checker)")
    p.set_defaults(func=cmd_gradcheck)

    p = subs.add_parser("attention-viz",
                        help="render attention weights for one sentence/target")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--sentence", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--span", help="START:END token positions when the target "
                                  "text is not found verbatim")
    p.add_argument("--out-dir", dest="out_dir", default=".")
    p.add_argument("--basename", default="attention")
    p.set_defaults(func=cmd_attention_viz)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, KeyError, FloatingPointError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
