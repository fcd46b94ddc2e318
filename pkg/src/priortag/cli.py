"""Batch command-line surface.

Every run resolves its configuration (defaults < config file < flags), records
a manifest sufficient to reproduce the run bit-exactly (resolved config, input
digests, toolkit version, seed), and writes only under paths derived from its
arguments. Exit codes: 0 ok, 1 internal error, 2 usage/input error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict, fields, replace

from . import __version__
from .corpus import ParseError, merge, read_conll, write_conll
from .crf import load_crf, save_crf, train_crf, viterbi
from .evaluation import (SweepSetup, binomial_test, eval_csv, eval_report, evaluate,
                         sweep_lambda)
from .lexicon import VectorFormatError, load_text_vectors
from .tagger import ArchConfig, decode, encode_corpus
from .training import TrainConfig, report_lines, train, write_summary
from .transfer import (AlignmentError, CheckpointError, load_checkpoint, read_container,
                       save_checkpoint)


class ConfigError(ValueError):
    pass


_ARCH_FIELDS = {f.name for f in fields(ArchConfig)} - {"lexicon_dims", "n_lstm_layers"}
_TRAIN_FIELDS = {f.name for f in fields(TrainConfig)} - {"mode"}
_INT_KEYS = {"word_emb_dim", "char_emb_dim", "char_hidden", "feat_emb_dim", "lstm_hidden",
             "max_epochs", "patience", "seed", "subword_min_n", "subword_max_n"}
_FLOAT_KEYS = {"dropout_lstm", "dropout_input", "lr", "beta1", "beta2", "eps", "lambda_",
               "clip_norm"}


def _coerce(key: str, raw: str):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            if key == "clip_norm" and raw.lower() in ("none", "off"):
                return None
            return float(raw)
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r}") from None
    return raw


def parse_config_file(path) -> dict:
    """Flat key=value file mirroring ArchConfig/TrainConfig field names."""
    values = {}
    known = _ARCH_FIELDS | _TRAIN_FIELDS | {"lambda", "vectors", "subword_min_n", "subword_max_n"}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key == "lambda":
                key = "lambda_"
            if key not in known and key != "lambda_":
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _coerce(key, value)
    return values


def _resolve(args, lexicon_dims=()):
    """Defaults < config file < CLI flags; returns (ArchConfig, TrainConfig, extras)."""
    values: dict = {}
    if getattr(args, "config", None):
        values.update(parse_config_file(args.config))
    for key in _ARCH_FIELDS | _TRAIN_FIELDS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    try:
        arch = ArchConfig(
            **{k: v for k, v in values.items() if k in _ARCH_FIELDS},
            lexicon_dims=tuple(lexicon_dims),
        )
        cfg = TrainConfig(**{k: v for k, v in values.items() if k in _TRAIN_FIELDS})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    extras = {
        "vectors": values.get("vectors", ""),
        "subword_min_n": values.get("subword_min_n", 3),
        "subword_max_n": values.get("subword_max_n", 6),
    }
    return arch, cfg, extras


def _load_lexicons(args, extras):
    """--vectors entries are `path` or `path::subword_path`; config `vectors`
    is the same, comma-separated."""
    specs = list(getattr(args, "vectors", None) or [])
    if not specs and extras["vectors"]:
        specs = [s for s in extras["vectors"].split(",") if s]
    lexicons = []
    for spec in specs:
        path, _, sub = spec.partition("::")
        lexicons.append(load_text_vectors(
            path, subword_path=sub or None,
            min_n=extras["subword_min_n"], max_n=extras["subword_max_n"],
        ))
    return tuple(lexicons), specs


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_path, command, inputs: dict, arch, cfg, extra=None):
    manifest = {
        "command": command,
        "toolkit_version": __version__,
        "seed": cfg.seed,
        "config": {"arch": asdict(arch), "train": asdict(cfg)},
        "inputs": {
            name: ([_sha256(p) for p in path] if isinstance(path, list) else _sha256(path))
            for name, path in inputs.items()
        },
    }
    if extra:
        manifest.update(extra)
    with open(f"{out_path}.manifest.json", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _write_train_outputs(out, report, params):
    save_checkpoint(params, out)
    report.model_path = str(out)
    with open(f"{out}.log", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(report_lines(report)) + "\n")
    write_summary(report, f"{out}.summary")


def _run_train(args, mode, prior=None, prior_path=None, joint=False):
    # lexicon dims shape the architecture, so load vectors before resolving
    _, _, extras = _resolve(args)
    lexicons, specs = _load_lexicons(args, extras)
    arch, cfg, extras = _resolve(args, lexicon_dims=[lex.dim for lex in lexicons])
    cfg = replace(cfg, mode=mode)
    if joint:
        source = read_conll(args.source)
        target = read_conll(args.target)
        train_corpus = merge(source, target)
        inputs = {"source": args.source, "target": args.target, "dev": args.dev}
    else:
        train_corpus = read_conll(args.train)
        inputs = {"train": args.train, "dev": args.dev}
    dev_corpus = read_conll(args.dev)
    if specs:
        inputs["vectors"] = [s.partition("::")[0] for s in specs]
    if prior_path:
        inputs["prior"] = prior_path
    best, report = train(train_corpus, dev_corpus, arch, cfg, lexicons=lexicons, prior=prior)
    _write_train_outputs(args.out, report, best)
    _write_manifest(args.out, mode, inputs, arch, cfg,
                    extra={"lambda": cfg.lambda_} if mode == "target" else None)
    for line in report_lines(report):
        print(line)
    return 0


def cmd_train_source(args):
    return _run_train(args, "source")


def cmd_train_target(args):
    prior = load_checkpoint(args.prior) if args.prior else None
    return _run_train(args, "target", prior=prior, prior_path=args.prior)


def cmd_train_joint(args):
    return _run_train(args, "joint", joint=True)


def cmd_train_crf(args):
    corpus = read_conll(args.train)
    model = train_crf(corpus, epochs=args.epochs, lr=args.lr, l2=args.l2)
    save_crf(model, args.out)
    arch, cfg, _ = _resolve(args)
    _write_manifest(args.out, "train-crf", {"train": args.train}, arch, cfg,
                    extra={"crf": {"epochs": args.epochs, "lr": args.lr, "l2": args.l2}})
    print(f"trained CRF on {corpus.n_tokens} tokens, {len(model.feature_index)} features")
    return 0


def cmd_tag(args):
    manifest, _ = read_container(args.model)
    corpus = read_conll(args.input)
    if manifest.get("model_type") == "crf":
        model = load_crf(args.model)
        preds = [viterbi(model, s) for s in corpus.sentences]
        write_conll(corpus, preds, args.output, tagset=model.tagset)
    else:
        params = load_checkpoint(args.model)
        _, _, extras = _resolve(args)
        lexicons, _ = _load_lexicons(args, extras)
        dims = tuple(lex.dim for lex in lexicons)
        if dims != params.arch.lexicon_dims:
            raise ConfigError(
                f"model was trained with lexicon dims {params.arch.lexicon_dims}, "
                f"got {dims}; pass the matching --vectors"
            )
        encodings = encode_corpus(params, corpus, lexicons)
        preds = [decode(params, s, lexicons, encoding=e)
                 for s, e in zip(corpus.sentences, encodings)]
        write_conll(corpus, preds, args.output, tagset=params.alphabets.tags)
    return 0


def _check_aligned(gold, pred, what):
    if len(gold.sentences) != len(pred.sentences):
        raise ValueError(f"{what}: sentence counts differ "
                         f"({len(gold.sentences)} vs {len(pred.sentences)})")
    for i, (g, p) in enumerate(zip(gold.sentences, pred.sentences)):
        if len(g) != len(p):
            raise ValueError(f"{what}: sentence {i + 1} token counts differ")
        for tg, tp in zip(g, p):
            if tg.surface != tp.surface:
                raise ValueError(f"{what}: surface mismatch {tg.surface!r} vs {tp.surface!r}")


def _gold_indices(corpus, what):
    out = []
    for sent in corpus.sentences:
        row = []
        for tok in sent:
            if tok.gold_tag is None:
                raise ValueError(f"{what}: token {tok.surface!r} has no tag")
            row.append(tok.gold_tag)
        out.append(row)
    return out


def cmd_evaluate(args):
    gold = read_conll(args.gold)
    pred = read_conll(args.pred)
    _check_aligned(gold, pred, "evaluate")
    result = evaluate(gold, _gold_indices(pred, args.pred), pred.tagset)
    with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(eval_report(result))
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(eval_csv(result))
    print(f"accuracy={result.accuracy!r} tokens={result.n_tokens}")
    return 0


def _tag_strings(corpus, what):
    return [corpus.tagset.tags[i] for row in _gold_indices(corpus, what) for i in row]


def cmd_compare(args):
    gold = read_conll(args.gold)
    a = read_conll(args.a)
    b = read_conll(args.b)
    _check_aligned(gold, a, "system A")
    _check_aligned(gold, b, "system B")
    gold_tags = _tag_strings(gold, args.gold)
    a_tags = _tag_strings(a, args.a)
    b_tags = _tag_strings(b, args.b)
    p = binomial_test(a_tags, b_tags, gold_tags)
    acc_a = sum(x == g for x, g in zip(a_tags, gold_tags)) / len(gold_tags)
    acc_b = sum(x == g for x, g in zip(b_tags, gold_tags)) / len(gold_tags)
    lines = [f"accuracy_a={acc_a!r}", f"accuracy_b={acc_b!r}", f"p_value={p!r}"]
    if args.report:
        with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0


def cmd_sweep(args):
    try:
        lambdas = [float(x) for x in args.lambdas.split(",") if x]
    except ValueError:
        raise ConfigError(f"cannot parse --lambdas {args.lambdas!r}") from None
    _, _, extras = _resolve(args)
    lexicons, specs = _load_lexicons(args, extras)
    arch, cfg, extras = _resolve(args, lexicon_dims=[lex.dim for lex in lexicons])
    cfg = replace(cfg, mode="target")
    setup = SweepSetup(
        train_corpus=read_conll(args.train),
        dev_corpus=read_conll(args.dev),
        test_corpus=read_conll(args.test),
        arch=arch,
        config=cfg,
        prior=load_checkpoint(args.prior),
        lexicons=lexicons,
    )
    result = sweep_lambda(setup, lambdas)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(result.to_csv())
    inputs = {"train": args.train, "dev": args.dev, "test": args.test, "prior": args.prior}
    if specs:
        inputs["vectors"] = [s.partition("::")[0] for s in specs]
    _write_manifest(args.out, "sweep-lambda", inputs, arch, cfg,
                    extra={"lambdas": lambdas})
    print(f"best_lambda={result.best_lambda!r}")
    return 0


def _add_config_flags(p, with_lambda=False):
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--max-epochs", type=int, dest="max_epochs")
    p.add_argument("--patience", type=int)
    p.add_argument("--clip-norm", type=float, dest="clip_norm")
    p.add_argument("--dropout-input", type=float, dest="dropout_input")
    p.add_argument("--dropout-lstm", type=float, dest="dropout_lstm")
    p.add_argument("--word-emb-dim", type=int, dest="word_emb_dim")
    p.add_argument("--char-emb-dim", type=int, dest="char_emb_dim")
    p.add_argument("--char-hidden", type=int, dest="char_hidden")
    p.add_argument("--feat-emb-dim", type=int, dest="feat_emb_dim")
    p.add_argument("--lstm-hidden", type=int, dest="lstm_hidden")
    p.add_argument("--vectors", action="append",
                   help="text vector file, `path` or `path::subword_path`; repeatable")
    if with_lambda:
        p.add_argument("--lambda", type=float, dest="lambda_",
                       help="prior penalty weight")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="priortag")
    parser.add_argument("--version", action="version", version=f"priortag {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("train-source", help="train on a source-domain corpus")
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_train_source)

    p = sub.add_parser("train-target", help="train on a target corpus with a prior penalty")
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--prior", help="source checkpoint supplying the prior weights")
    p.add_argument("--out", required=True)
    _add_config_flags(p, with_lambda=True)
    p.set_defaults(func=cmd_train_target)

    p = sub.add_parser("train-joint", help="train on source+target merged")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_train_joint)

    p = sub.add_parser("train-crf", help="train the linear-chain CRF baseline")
    p.add_argument("--train", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train_crf)

    p = sub.add_parser("tag", help="tag a corpus with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--vectors", action="append")
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("evaluate", help="score predictions against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--csv", help="also write the confusion-count CSV here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep-lambda", help="train across a lambda grid, report dev/test")
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--prior", required=True)
    p.add_argument("--lambdas", required=True, help="comma-separated, strictly increasing")
    p.add_argument("--out", required=True, help="CSV output path")
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="exact sign test between two prediction files")
    p.add_argument("--gold", required=True)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ParseError, VectorFormatError, CheckpointError, AlignmentError,
            ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
