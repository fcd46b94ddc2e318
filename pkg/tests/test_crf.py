import itertools

import numpy as np
import pytest

from priortag.corpus import Token
from priortag.crf import (CrfModel, featurize_crf, load_crf, log_partition, log_score,
                          objective_and_gradient, posteriors, save_crf, train_crf,
                          viterbi)

from conftest import make_corpus
from numgrad import central_diff, rel_err


def random_model(rng, corpus, scale=1.0):
    feature_index = {}
    for sent in corpus.sentences:
        for tok in sent:
            for f in sorted(featurize_crf(tok)):
                feature_index.setdefault(f, len(feature_index))
    k = len(corpus.tagset)
    return CrfModel(
        feature_index=feature_index,
        tagset=corpus.tagset,
        weights=scale * rng.normal(size=(len(feature_index), k)),
        transitions=scale * rng.normal(size=(k, k)),
        begin=scale * rng.normal(size=k),
        end=scale * rng.normal(size=k),
    )


def random_corpus(rng, n_sentences, max_len=5, n_tags=4):
    # surfaces are distinct within a sentence: repeated tokens make permuted
    # tag paths tie exactly, and float summation order would then decide
    pool = ["Haus", "#tag", "@who", "geht", "A1b", "!!", "der", "ok"]
    tags = ["A", "B", "C", "D"][:n_tags]
    rows = []
    for _ in range(n_sentences):
        length = int(rng.integers(1, max_len + 1))
        words = rng.choice(pool, size=length, replace=False)
        rows.append([(str(w), tags[int(rng.integers(0, n_tags))]) for w in words])
    return make_corpus(rows, tags=tags)


def brute_force(model, sentence):
    """Exhaustive oracle: (logZ, best sequence under the backtrack tie rule)."""
    k = model.n_tags
    scores = {
        seq: log_score(model, sentence, seq)
        for seq in itertools.product(range(k), repeat=len(sentence))
    }
    arr = np.array(list(scores.values()))
    m = arr.max()
    log_z = m + np.log(np.exp(arr - m).sum())
    best = max(scores.values())
    optimal = [seq for seq, v in scores.items() if v >= best - 1e-9]
    # the per-step lowest-index backtrack picks the optimum whose reversed
    # tuple is lexicographically smallest
    pick = min(optimal, key=lambda seq: tuple(reversed(seq)))
    return float(log_z), list(pick)


def test_featurize_examples():
    assert featurize_crf(Token("#yolo")) == {
        "lower=#yolo", "len=5", "nupper=0", "ndigit=0", "hashtag",
    }
    assert featurize_crf(Token("Haus")) == {
        "lower=haus", "len=4", "nupper=1", "ndigit=0",
    }


def test_shared_lower_feature_id():
    corpus = make_corpus([[("Haus", "A"), ("haus", "B")]])
    model = train_crf(corpus, epochs=1, lr=0.1, l2=0.0)
    assert "lower=haus" in model.feature_index
    assert sum(1 for f in model.feature_index if f.startswith("lower=")) == 1


def test_log_score_zero_weights(rng):
    corpus = random_corpus(rng, 1)
    model = random_model(rng, corpus, scale=0.0)
    sent = corpus.sentences[0]
    for seq in itertools.product(range(4), repeat=len(sent)):
        assert log_score(model, sent, seq) == 0.0


def test_log_score_single_emission_weight(rng):
    corpus = make_corpus([[("Haus", "A"), ("geht", "B")]], tags=["A", "B"])
    model = random_model(rng, corpus, scale=0.0)
    model.weights[model.feature_index["lower=haus"], 1] = 1.5
    assert log_score(model, corpus.sentences[0], [1, 0]) == 1.5


def test_log_score_hand_summed(rng):
    corpus = random_corpus(rng, 1, max_len=4)
    model = random_model(rng, corpus)
    sent = corpus.sentences[0]
    seq = [int(rng.integers(0, 4)) for _ in sent]
    # independent summation, token by token
    expected = model.begin[seq[0]] + model.end[seq[-1]]
    for t, tok in enumerate(sent):
        for f in featurize_crf(tok):
            expected += model.weights[model.feature_index[f], seq[t]]
        if t > 0:
            expected += model.transitions[seq[t - 1], seq[t]]
    assert abs(log_score(model, sent, seq) - expected) < 1e-10


def test_log_score_length_mismatch(rng):
    corpus = random_corpus(rng, 1, max_len=3)
    model = random_model(rng, corpus)
    with pytest.raises(ValueError):
        log_score(model, corpus.sentences[0], [0] * (len(corpus.sentences[0]) + 1))


def test_log_partition_uniform_cases(rng):
    corpus = make_corpus([[("a", "A")], [("a", "A"), ("b", "B"), ("c", "A")]],
                         tags=["A", "B"])
    model = random_model(rng, corpus, scale=0.0)
    assert abs(log_partition(model, corpus.sentences[0]) - np.log(2)) < 1e-12
    assert abs(log_partition(model, corpus.sentences[1]) - 3 * np.log(2)) < 1e-12


def test_log_partition_matches_brute_force(rng):
    for _ in range(40):
        corpus = random_corpus(rng, 1)
        model = random_model(rng, corpus)
        sent = corpus.sentences[0]
        log_z, _ = brute_force(model, sent)
        assert abs(log_partition(model, sent) - log_z) < 1e-10


def test_log_partition_dominates_log_score(rng):
    for _ in range(10):
        corpus = random_corpus(rng, 1)
        model = random_model(rng, corpus)
        sent = corpus.sentences[0]
        z = log_partition(model, sent)
        for seq in itertools.product(range(4), repeat=len(sent)):
            assert z >= log_score(model, sent, seq)


def test_viterbi_single_token(rng):
    corpus = random_corpus(rng, 1, max_len=1)
    model = random_model(rng, corpus)
    sent = corpus.sentences[0]
    scores = [log_score(model, sent, [k]) for k in range(4)]
    assert viterbi(model, sent) == [int(np.argmax(scores))]


def test_viterbi_zero_weights_tie_rule(rng):
    corpus = random_corpus(rng, 1, max_len=5)
    model = random_model(rng, corpus, scale=0.0)
    assert viterbi(model, corpus.sentences[0]) == [0] * len(corpus.sentences[0])


def test_viterbi_matches_brute_force(rng):
    for _ in range(40):
        corpus = random_corpus(rng, 1)
        model = random_model(rng, corpus)
        sent = corpus.sentences[0]
        _, best = brute_force(model, sent)
        assert viterbi(model, sent) == best


def test_viterbi_tie_rule_exact_integer_weights(rng):
    # small-integer weights add exactly in float64, so tied paths tie in both
    # the recursion and the oracle and only the tie rule decides; repeated
    # surfaces make such ties common
    pool = ["aa", "bb"]
    tags = ["A", "B", "C"]
    for _ in range(60):
        length = int(rng.integers(2, 6))
        rows = [[(pool[int(rng.integers(0, 2))], tags[int(rng.integers(0, 3))])
                 for _ in range(length)]]
        corpus = make_corpus(rows, tags=tags)
        model = random_model(rng, corpus, scale=0.0)
        model.weights += rng.integers(-2, 3, size=model.weights.shape)
        model.transitions += rng.integers(-2, 3, size=model.transitions.shape)
        model.begin += rng.integers(-2, 3, size=model.begin.shape)
        model.end += rng.integers(-2, 3, size=model.end.shape)
        sent = corpus.sentences[0]
        _, best = brute_force(model, sent)
        assert viterbi(model, sent) == best


def test_marginals_sum_to_one(rng):
    for _ in range(10):
        corpus = random_corpus(rng, 1)
        model = random_model(rng, corpus)
        unary, pairwise, _ = posteriors(model, corpus.sentences[0])
        assert np.max(np.abs(unary.sum(axis=1) - 1.0)) < 1e-10
        for t in range(pairwise.shape[0]):
            assert abs(pairwise[t].sum() - 1.0) < 1e-10


def test_gradient_matches_finite_differences(rng):
    corpus = random_corpus(rng, 3, max_len=4, n_tags=3)
    model = random_model(rng, corpus, scale=0.4)
    _, grads = objective_and_gradient(model, corpus, l2=0.01)
    for name, arr in (("weights", model.weights), ("transitions", model.transitions),
                      ("begin", model.begin), ("end", model.end)):
        num = central_diff(
            lambda: objective_and_gradient(model, corpus, l2=0.01)[0], arr
        )
        assert rel_err(grads[name], num) < 1e-4, name


def test_train_overfits_repeated_sentence():
    corpus = make_corpus([[("Das", "ART"), ("Haus", "NN"), ("brennt", "VV")]] * 4)
    model = train_crf(corpus, epochs=50, lr=0.5, l2=1e-4)
    for sent in corpus.sentences:
        assert viterbi(model, sent) == [t.gold_tag for t in sent]


def test_l2_shrinks_weights(rng):
    corpus = random_corpus(rng, 4, n_tags=3)
    small = train_crf(corpus, epochs=30, lr=0.5, l2=1e-4)
    large = train_crf(corpus, epochs=30, lr=0.5, l2=0.5)
    norm = lambda m: float((m.weights ** 2).sum() + (m.transitions ** 2).sum()
                           + (m.begin ** 2).sum() + (m.end ** 2).sum())
    assert norm(large) < norm(small)


def test_train_empty_or_untagged_errors(tiny_corpus):
    from priortag.corpus import Corpus, TagSet
    with pytest.raises(ValueError):
        train_crf(Corpus((), TagSet(()), "empty"))
    untagged = make_corpus([[("a", None)]], tags=[])
    with pytest.raises(ValueError):
        train_crf(untagged)


def test_crf_checkpoint_round_trip(tmp_path, rng):
    corpus = random_corpus(rng, 3)
    model = train_crf(corpus, epochs=5, lr=0.5, l2=1e-4)
    path = tmp_path / "crf.ckpt"
    save_crf(model, path)
    back = load_crf(path)
    assert back.feature_index == model.feature_index
    assert back.tagset == model.tagset
    for name in ("weights", "transitions", "begin", "end"):
        assert np.array_equal(getattr(back, name), getattr(model, name))
    sent = corpus.sentences[0]
    assert viterbi(back, sent) == viterbi(model, sent)
