"""Optimization loop: Adam, seeded shuffling, dropout, prior penalty, early stopping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import tagger as tg
from .corpus import Corpus, merge
from .transfer import align_prior, penalty


class OptimizationError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_epochs: int = 50
    patience: int = 5
    lambda_: float = 0.0
    seed: int = 42
    mode: str = "target"          # source | target | joint
    clip_norm: float | None = 5.0  # global gradient norm; None disables

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.lambda_ < 0 or not np.isfinite(self.lambda_):
            raise ValueError("lambda must be finite and >= 0")
        if self.mode not in ("source", "target", "joint"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class EpochStats:
    epoch: int
    train_loss: float     # cross-entropy + penalty
    train_ce: float
    train_penalty: float
    dev_accuracy: float


@dataclass
class TrainReport:
    epochs: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0
    best_dev_accuracy: float = 0.0
    stopped_early: bool = False
    model_path: str | None = None


def report_lines(report: TrainReport) -> list[str]:
    lines = [
        f"epoch={e.epoch} train_loss={e.train_loss!r} ce={e.train_ce!r} "
        f"penalty={e.train_penalty!r} dev_acc={e.dev_accuracy!r}"
        for e in report.epochs
    ]
    lines.append(
        f"best_epoch={report.best_epoch} best_dev_acc={report.best_dev_accuracy!r} "
        f"stopped_early={report.stopped_early}"
    )
    return lines


def write_summary(report: TrainReport, path) -> None:
    pairs = [
        ("n_epochs", len(report.epochs)),
        ("best_epoch", report.best_epoch),
        ("best_dev_accuracy", repr(report.best_dev_accuracy)),
        ("stopped_early", report.stopped_early),
        ("final_train_loss", repr(report.epochs[-1].train_loss) if report.epochs else ""),
        ("final_train_ce", repr(report.epochs[-1].train_ce) if report.epochs else ""),
        ("final_train_penalty", repr(report.epochs[-1].train_penalty) if report.epochs else ""),
        ("model_path", report.model_path or ""),
    ]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in pairs:
            fh.write(f"{key}={value}\n")


class AdamState:
    """First/second moment estimates plus the shared step counter."""

    def __init__(self, params: tg.ParamStore):
        self.step = 0
        self.m = {name: np.zeros_like(t.data) for name, t in params.tensors.items()}
        self.v = {name: np.zeros_like(t.data) for name, t in params.tensors.items()}


def adam_step(params: tg.ParamStore, grads: dict, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
    """One bias-corrected Adam update; tensors without a gradient entry decay
    their moments as if the gradient were zero."""
    state.step += 1
    bc1 = 1.0 - beta1 ** state.step
    bc2 = 1.0 - beta2 ** state.step
    for name, tensor in params.tensors.items():
        g = grads.get(name)
        if g is None:
            g = 0.0
        elif not np.all(np.isfinite(g)):
            raise OptimizationError(f"non-finite gradient for tensor {name!r}")
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * np.square(g)
        tensor.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def clip_gradients(grads: dict, max_norm: float) -> float:
    """Scale all gradients in place so the global L2 norm is <= max_norm."""
    total = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if total > max_norm:
        factor = max_norm / total
        for g in grads.values():
            g *= factor
    return total


def corpus_accuracy(params: tg.ParamStore, corpus: Corpus, lexicons=(), encodings=None) -> float:
    """Token accuracy of greedy decoding against the corpus's gold tags,
    compared as tag strings (the corpora may use different tagsets)."""
    if encodings is None:
        encodings = tg.encode_corpus(params, corpus, lexicons)
    model_tags = params.alphabets.tags.tags
    correct = 0
    total = 0
    for sent, enc in zip(corpus.sentences, encodings):
        pred = tg.decode(params, sent, lexicons, encoding=enc)
        for tok, p in zip(sent, pred):
            if tok.gold_tag is None:
                raise ValueError("accuracy requires gold tags on every token")
            total += 1
            if corpus.tagset.tags[tok.gold_tag] == model_tags[p]:
                correct += 1
    return correct / total


def train(train_corpus: Corpus, dev_corpus: Corpus, arch: tg.ArchConfig, config: TrainConfig,
          lexicons=(), prior: tg.ParamStore | None = None,
          params: tg.ParamStore | None = None, dev_metric=None):
    """Train the tagger; returns (best ParamStore, TrainReport).

    One epoch is a seeded-shuffle pass with per-sentence updates; the loss is
    cross-entropy plus the prior penalty when a prior is given with lambda > 0.
    Stops after `patience` epochs without a dev improvement and returns the
    best-dev model.
    """
    if len(train_corpus.sentences) == 0:
        raise ValueError("cannot train on an empty corpus")
    rng = np.random.default_rng(config.seed)
    if params is None:
        alphabets = tg.build_alphabet_set(train_corpus)
        params = tg.init_params(arch, alphabets, rng)
    train_enc = tg.encode_corpus(params, train_corpus, lexicons)
    for enc in train_enc:
        if enc.gold is None:
            raise ValueError("training requires gold tags on every token")
    dev_enc = None
    if dev_metric is None:
        dev_enc = tg.encode_corpus(params, dev_corpus, lexicons)

    prior_active = prior is not None and config.lambda_ > 0.0
    if prior_active:
        aligned, mask = align_prior(prior, params)

    state = AdamState(params)
    report = TrainReport()
    best_params = None
    since_best = 0
    n = len(train_corpus.sentences)
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        ce_sum = 0.0
        pen_sum = 0.0
        for i in order:
            params.zero_grads()
            tape = ad.Tape()
            ce = tg.loss(params, train_corpus.sentences[i], lexicons,
                         train=True, rng=rng, tape=tape, encoding=train_enc[i])
            ad.backward(tape, ce)
            grads = {name: t.grad for name, t in params.tensors.items() if t.grad is not None}
            if prior_active:
                pen_val, pen_grads = penalty(params, aligned, mask, config.lambda_)
                for name, g in pen_grads.items():
                    if name in grads:
                        grads[name] = grads[name] + g
                    else:
                        grads[name] = g
                pen_sum += pen_val
            if config.clip_norm is not None:
                clip_gradients(grads, config.clip_norm)
            adam_step(params, grads, state, config.lr, config.beta1, config.beta2, config.eps)
            ce_sum += float(ce.data)
        if dev_metric is not None:
            dev_acc = float(dev_metric(params))
        else:
            dev_acc = corpus_accuracy(params, dev_corpus, lexicons, dev_enc)
        report.epochs.append(EpochStats(
            epoch, ce_sum / n + pen_sum / n, ce_sum / n, pen_sum / n, dev_acc,
        ))
        if best_params is None or dev_acc > report.best_dev_accuracy:
            best_params = params.clone()
            report.best_dev_accuracy = dev_acc
            report.best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                report.stopped_early = True
                break
    return best_params, report


def train_joint(source_corpus: Corpus, target_corpus: Corpus, dev_corpus: Corpus,
                arch: tg.ArchConfig, config: TrainConfig, lexicons=()):
    """Train one model on source+target merged under the union tagset; no prior."""
    merged = merge(source_corpus, target_corpus)
    return train(merged, dev_corpus, arch, config, lexicons)
