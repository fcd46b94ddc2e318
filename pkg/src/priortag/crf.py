"""Linear-chain CRF tagger over per-token feature dictionaries.

Emission potentials come from string features, transition potentials from
adjacent tag pairs plus explicit begin/end vectors. Training maximizes the
mean per-sentence log-likelihood minus l2*||theta||^2 by full-batch gradient
ascent (forward-backward expectations); decoding is Viterbi with ties broken
toward the lower tag index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, Sentence, TagSet, Token
from .features import extract


def featurize_crf(token: Token) -> set[str]:
    """Per-token feature strings: lowercased form, length/uppercase/digit
    buckets, and hashtag/url/mention/symbol flags when they fire."""
    b = extract(token.surface)
    feats = {
        f"lower={b.lower}",
        f"len={b.length_bucket}",
        f"nupper={b.n_upper_bucket}",
        f"ndigit={b.n_digit_bucket}",
    }
    if b.is_hashtag:
        feats.add("hashtag")
    if b.is_url:
        feats.add("url")
    if b.is_mention:
        feats.add("mention")
    if b.has_symbol:
        feats.add("symbol")
    return feats


@dataclass
class CrfModel:
    feature_index: dict[str, int]
    tagset: TagSet
    weights: np.ndarray      # (n_features, n_tags)
    transitions: np.ndarray  # (n_tags, n_tags), [from, to]
    begin: np.ndarray        # (n_tags,)
    end: np.ndarray          # (n_tags,)

    @property
    def n_tags(self) -> int:
        return len(self.tagset)


def _feature_ids(model: CrfModel, sentence: Sentence) -> list[list[int]]:
    """Known feature ids per token; unseen features are skipped."""
    out = []
    for tok in sentence:
        ids = [model.feature_index[f] for f in featurize_crf(tok) if f in model.feature_index]
        ids.sort()
        out.append(ids)
    return out


def _emissions(model: CrfModel, fids: list[list[int]]) -> np.ndarray:
    E = np.zeros((len(fids), model.n_tags))
    for t, ids in enumerate(fids):
        if ids:
            E[t] = model.weights[ids].sum(axis=0)
    return E


def _logsumexp(a: np.ndarray, axis=None):
    m = a.max(axis=axis, keepdims=True)
    out = m + np.log(np.exp(a - m).sum(axis=axis, keepdims=True))
    return out.squeeze(axis) if axis is not None else float(out.reshape(())[()])


def log_score(model: CrfModel, sentence: Sentence, tags) -> float:
    """Unnormalized log potential of one tag sequence."""
    tags = list(tags)
    if len(tags) != len(sentence):
        raise ValueError(
            f"tag sequence length {len(tags)} does not match sentence length {len(sentence)}"
        )
    E = _emissions(model, _feature_ids(model, sentence))
    score = model.begin[tags[0]] + E[0, tags[0]]
    for t in range(1, len(tags)):
        score += model.transitions[tags[t - 1], tags[t]] + E[t, tags[t]]
    return float(score + model.end[tags[-1]])


def _forward(model: CrfModel, E: np.ndarray) -> np.ndarray:
    T = E.shape[0]
    alpha = np.empty_like(E)
    alpha[0] = model.begin + E[0]
    for t in range(1, T):
        alpha[t] = _logsumexp(alpha[t - 1][:, None] + model.transitions, axis=0) + E[t]
    return alpha


def _backward_pass(model: CrfModel, E: np.ndarray) -> np.ndarray:
    T = E.shape[0]
    beta = np.empty_like(E)
    beta[T - 1] = model.end
    for t in range(T - 2, -1, -1):
        beta[t] = _logsumexp(model.transitions + E[t + 1] + beta[t + 1], axis=1)
    return beta


def log_partition(model: CrfModel, sentence: Sentence) -> float:
    """log of the sum over all tag sequences of exp(log_score), by the forward
    recursion in log space."""
    E = _emissions(model, _feature_ids(model, sentence))
    alpha = _forward(model, E)
    return float(_logsumexp(alpha[-1] + model.end))


def posteriors(model: CrfModel, sentence: Sentence):
    """(unary (T,K), pairwise (T-1,K,K), logZ) marginals from forward-backward."""
    E = _emissions(model, _feature_ids(model, sentence))
    alpha = _forward(model, E)
    beta = _backward_pass(model, E)
    log_z = float(_logsumexp(alpha[-1] + model.end))
    unary = np.exp(alpha + beta - log_z)
    T = E.shape[0]
    pairwise = np.empty((max(T - 1, 0), model.n_tags, model.n_tags))
    for t in range(1, T):
        pairwise[t - 1] = np.exp(
            alpha[t - 1][:, None] + model.transitions + (E[t] + beta[t])[None, :] - log_z
        )
    return unary, pairwise, log_z


def viterbi(model: CrfModel, sentence: Sentence) -> list[int]:
    """Argmax tag sequence; every argmax (including backtracking) takes the
    lowest tag index on ties."""
    E = _emissions(model, _feature_ids(model, sentence))
    T = E.shape[0]
    delta = model.begin + E[0]
    back = np.zeros((T, model.n_tags), dtype=np.intp)
    for t in range(1, T):
        cand = delta[:, None] + model.transitions
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(model.n_tags)] + E[t]
    best = int(np.argmax(delta + model.end))
    path = [best]
    for t in range(T - 1, 0, -1):
        best = int(back[t, best])
        path.append(best)
    path.reverse()
    return path


def objective_and_gradient(model: CrfModel, corpus: Corpus, l2: float = 0.0, _data=None):
    """Mean per-sentence log-likelihood minus l2*||theta||^2, with its gradient
    from forward-backward expectations (observed minus expected counts)."""
    if _data is None:
        _data = [
            (_feature_ids(model, s), np.array([t.gold_tag for t in s], dtype=np.intp))
            for s in corpus.sentences
        ]
    n = len(_data)
    value = 0.0
    g_w = np.zeros_like(model.weights)
    g_tr = np.zeros_like(model.transitions)
    g_begin = np.zeros_like(model.begin)
    g_end = np.zeros_like(model.end)
    for fids, gold in _data:
        E = _emissions(model, fids)
        alpha = _forward(model, E)
        beta = _backward_pass(model, E)
        log_z = float(_logsumexp(alpha[-1] + model.end))
        unary = np.exp(alpha + beta - log_z)
        T = E.shape[0]
        gold_score = model.begin[gold[0]] + E[np.arange(T), gold].sum() + model.end[gold[-1]]
        for t, ids in enumerate(fids):
            diff = -unary[t]
            diff[gold[t]] += 1.0
            if ids:
                g_w[ids] += diff
        for t in range(1, T):
            gold_score += model.transitions[gold[t - 1], gold[t]]
            xi = np.exp(
                alpha[t - 1][:, None] + model.transitions
                + (E[t] + beta[t])[None, :] - log_z
            )
            g_tr -= xi
            g_tr[gold[t - 1], gold[t]] += 1.0
        g_begin -= unary[0]
        g_begin[gold[0]] += 1.0
        g_end -= unary[-1]
        g_end[gold[-1]] += 1.0
        value += gold_score - log_z
    grads = {
        "weights": g_w / n - 2.0 * l2 * model.weights,
        "transitions": g_tr / n - 2.0 * l2 * model.transitions,
        "begin": g_begin / n - 2.0 * l2 * model.begin,
        "end": g_end / n - 2.0 * l2 * model.end,
    }
    reg = l2 * (
        (model.weights ** 2).sum() + (model.transitions ** 2).sum()
        + (model.begin ** 2).sum() + (model.end ** 2).sum()
    )
    return value / n - reg, grads


def train_crf(corpus: Corpus, epochs: int = 100, lr: float = 0.5, l2: float = 1e-4) -> CrfModel:
    """Batch gradient ascent on mean log-likelihood - l2*||theta||^2.

    Weights start at zero (the objective is concave), so training is
    deterministic by construction.
    """
    if len(corpus.sentences) == 0:
        raise ValueError("cannot train a CRF on an empty corpus")
    feature_index: dict[str, int] = {}
    for sent in corpus.sentences:
        for tok in sent:
            if tok.gold_tag is None:
                raise ValueError("CRF training requires gold tags on every token")
            for f in sorted(featurize_crf(tok)):
                feature_index.setdefault(f, len(feature_index))
    n_tags = len(corpus.tagset)
    model = CrfModel(
        feature_index=feature_index,
        tagset=corpus.tagset,
        weights=np.zeros((len(feature_index), n_tags)),
        transitions=np.zeros((n_tags, n_tags)),
        begin=np.zeros(n_tags),
        end=np.zeros(n_tags),
    )
    data = [
        (_feature_ids(model, s), np.array([t.gold_tag for t in s], dtype=np.intp))
        for s in corpus.sentences
    ]
    for _ in range(epochs):
        _, grads = objective_and_gradient(model, corpus, l2, _data=data)
        model.weights += lr * grads["weights"]
        model.transitions += lr * grads["transitions"]
        model.begin += lr * grads["begin"]
        model.end += lr * grads["end"]
    return model


def save_crf(model: CrfModel, path) -> None:
    from .transfer import write_container

    features = [None] * len(model.feature_index)
    for f, i in model.feature_index.items():
        features[i] = f
    payload = {
        "model_type": "crf",
        "crf": {"features": features, "tags": list(model.tagset.tags)},
    }
    arrays = [
        ("weights", model.weights),
        ("transitions", model.transitions),
        ("begin", model.begin),
        ("end", model.end),
    ]
    write_container(path, payload, arrays)


def load_crf(path) -> CrfModel:
    from .transfer import CheckpointFormatError, read_container

    manifest, arrays = read_container(path)
    if manifest.get("model_type") != "crf":
        raise CheckpointFormatError(
            f"{path}: model_type {manifest.get('model_type')!r}, expected 'crf'"
        )
    features = manifest["crf"]["features"]
    tagset = TagSet(manifest["crf"]["tags"])
    expected = {
        "weights": (len(features), len(tagset)),
        "transitions": (len(tagset), len(tagset)),
        "begin": (len(tagset),),
        "end": (len(tagset),),
    }
    for name, shape in expected.items():
        if name not in arrays or arrays[name].shape != shape:
            raise CheckpointFormatError(f"{path}: tensor {name!r} missing or mis-shaped")
    return CrfModel(
        feature_index={f: i for i, f in enumerate(features)},
        tagset=tagset,
        weights=arrays["weights"],
        transitions=arrays["transitions"],
        begin=arrays["begin"],
        end=arrays["end"],
    )
