"""Accuracy, per-tag error analysis, lambda sweep, and paired significance testing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .corpus import Corpus, TagSet
from .tagger import ArchConfig, ParamStore, decode, encode_corpus
from .training import TrainConfig, train

# Reference test-set accuracies reported for the original German Twitter
# setup (TIGER newswire source, Rehbein tweet corpus). Those corpora are
# licensed and not distributable, so these numbers are context for reading
# toolkit output, never test targets.
REFERENCE_TEST_ACCURACY = {
    "baseline_crf": 0.831,
    "baseline_neural": 0.634,
    "neural+features": 0.768,
    "neural+features+chars": 0.796,
    "neural+features+chars+pretrained": 0.845,
    "neural+features+chars+pretrained+l2": 0.896,
    "neural+features+chars+pretrained+l2+dropout": 0.903,
    "neural_joint_training": 0.894,
    "rehbein_2013_final_crf": 0.888,
    "ncrfpp": 0.887,
}

# Reference lambda sweep on that setup: accuracy rises to an optimum at 1e-3
# and falls once the prior dominates.
REFERENCE_LAMBDA_SWEEP = {
    "test": (
        (0.0, 0.840495756), (1e-05, 0.854102115), (0.0001, 0.879294086),
        (0.001, 0.896), (0.01, 0.893035161), (0.1, 0.85504513),
        (0.5, 0.772329247), (1.0, 0.756836858), (1.5, 0.753603664),
    ),
    "dev": (
        (0.0, 0.838910398), (1e-05, 0.852461283), (0.0001, 0.872649336),
        (0.001, 0.898091814), (0.01, 0.886061947), (0.1, 0.851769912),
        (0.5, 0.760370575), (1.0, 0.745713496), (1.5, 0.743639381),
    ),
}


@dataclass
class EvalResult:
    n_tokens: int
    n_correct: int
    accuracy: float
    per_tag_errors: dict[str, int]          # keyed by the GOLD tag
    confusion: dict[tuple[str, str], int]   # (gold, predicted) -> count


def evaluate(gold: Corpus, predicted, pred_tagset: TagSet | None = None) -> EvalResult:
    """Exact-match token accuracy; errors are attributed to the gold tag.

    `predicted` is a per-sentence list of tag indices, rendered through
    `pred_tagset` (defaults to the gold corpus's tagset).
    """
    tagset = pred_tagset if pred_tagset is not None else gold.tagset
    if len(predicted) != len(gold.sentences):
        raise ValueError(
            f"predictions cover {len(predicted)} sentences, corpus has {len(gold.sentences)}"
        )
    n_tokens = 0
    n_correct = 0
    per_tag_errors: dict[str, int] = {}
    confusion: dict[tuple[str, str], int] = {}
    for sent, pred in zip(gold.sentences, predicted):
        if len(pred) != len(sent):
            raise ValueError("prediction length does not match sentence length")
        for tok, p in zip(sent, pred):
            if tok.gold_tag is None:
                raise ValueError("evaluation requires gold tags on every token")
            gold_tag = gold.tagset.tags[tok.gold_tag]
            pred_tag = tagset.tags[p]
            n_tokens += 1
            if gold_tag == pred_tag:
                n_correct += 1
            else:
                per_tag_errors[gold_tag] = per_tag_errors.get(gold_tag, 0) + 1
                confusion[(gold_tag, pred_tag)] = confusion.get((gold_tag, pred_tag), 0) + 1
    return EvalResult(n_tokens, n_correct, n_correct / n_tokens, per_tag_errors, confusion)


def top_error_tags(result: EvalResult, k: int) -> list[tuple[str, int]]:
    """Top-k gold tags by error count; ties resolved by tag-string order."""
    ranked = sorted(result.per_tag_errors.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:k]


def eval_report(result: EvalResult, k: int = 6) -> str:
    lines = [
        f"tokens: {result.n_tokens}",
        f"correct: {result.n_correct}",
        f"accuracy: {result.accuracy:.6f}",
        "",
        f"errors by gold tag (top {k}):",
    ]
    for tag, count in top_error_tags(result, k):
        lines.append(f"  {tag}\t{count}")
    lines.append("")
    lines.append("most frequent confusions (gold -> predicted):")
    ranked = sorted(result.confusion.items(), key=lambda kv: (-kv[1], kv[0]))
    for (gold_tag, pred_tag), count in ranked[:k]:
        lines.append(f"  {gold_tag} -> {pred_tag}\t{count}")
    return "\n".join(lines) + "\n"


def eval_csv(result: EvalResult) -> str:
    """Confusion counts as CSV with header gold_tag,predicted_tag,count."""
    lines = ["gold_tag,predicted_tag,count"]
    for (gold_tag, pred_tag), count in sorted(result.confusion.items()):
        lines.append(f"{gold_tag},{pred_tag},{count}")
    return "\n".join(lines) + "\n"


@dataclass
class SweepSetup:
    """Everything one lambda-sweep run needs besides the lambda grid."""

    train_corpus: Corpus
    dev_corpus: Corpus
    test_corpus: Corpus
    arch: ArchConfig
    config: TrainConfig
    prior: ParamStore
    lexicons: tuple = ()


@dataclass
class SweepResult:
    rows: list[tuple[float, float, float]] = field(default_factory=list)  # (lambda, dev, test)

    @property
    def best_lambda(self) -> float:
        """Argmax-dev lambda; the smallest such lambda on ties."""
        best = max(self.rows, key=lambda r: r[1])
        for lam, dev, _ in self.rows:
            if dev == best[1]:
                return lam
        return best[0]

    def to_csv(self) -> str:
        lines = ["lambda,dev_accuracy,test_accuracy"]
        for lam, dev, test in self.rows:
            lines.append(f"{lam!r},{dev!r},{test!r}")
        return "\n".join(lines) + "\n"


def sweep_lambda(setup: SweepSetup, lambdas) -> SweepResult:
    """Train once per lambda with the identical seed; report dev/test accuracy."""
    lambdas = [float(x) for x in lambdas]
    if any(b <= a for a, b in zip(lambdas, lambdas[1:])):
        raise ValueError("lambdas must be strictly increasing")
    result = SweepResult()
    for lam in lambdas:
        config = replace(setup.config, lambda_=lam)
        best, report = train(
            setup.train_corpus, setup.dev_corpus, setup.arch, config,
            lexicons=setup.lexicons, prior=setup.prior,
        )
        test_enc = encode_corpus(best, setup.test_corpus, setup.lexicons)
        preds = [
            decode(best, s, setup.lexicons, encoding=e)
            for s, e in zip(setup.test_corpus.sentences, test_enc)
        ]
        test_acc = evaluate(setup.test_corpus, preds, best.alphabets.tags).accuracy
        result.rows.append((lam, report.best_dev_accuracy, test_acc))
    return result


def binomial_test(a_pred, b_pred, gold) -> float:
    """Exact two-sided sign test over tokens where exactly one system is correct.

    Under H0 each discordant token favors either system with probability 1/2;
    p = 2 * min(tail probabilities), capped at 1. Zero discordant tokens give 1.
    """
    a_pred, b_pred, gold = list(a_pred), list(b_pred), list(gold)
    if not (len(a_pred) == len(b_pred) == len(gold)):
        raise ValueError(
            f"prediction/gold lengths differ: {len(a_pred)}, {len(b_pred)}, {len(gold)}"
        )
    n_a = n_b = 0
    for a, b, g in zip(a_pred, b_pred, gold):
        a_ok, b_ok = a == g, b == g
        if a_ok and not b_ok:
            n_a += 1
        elif b_ok and not a_ok:
            n_b += 1
    n = n_a + n_b
    if n == 0:
        return 1.0
    k = min(n_a, n_b)
    tail = sum(math.comb(n, i) for i in range(k + 1))
    return min(1.0, 2.0 * (tail / 2 ** n))
