#!/usr/bin/env python3
"""Walkthrough: the linear-chain CRF baseline.

Trains the CRF on a synthetic corpus, decodes with Viterbi, scores against
gold, and peeks at the probabilistic machinery (partition function, marginals).
"""

import numpy as np

from priortag.crf import log_partition, log_score, posteriors, train_crf, viterbi
from priortag.evaluation import evaluate, top_error_tags
from priortag.synthetic import make_source_generator, sample_corpus

gen = make_source_generator(seed=1, vocab_size=60, n_tags=5, len_range=(4, 9))
train_corpus = sample_corpus(gen, 150, seed=10, name="crf-train")
test_corpus = sample_corpus(gen, 50, seed=11, name="crf-test")

print(f"training on {train_corpus.n_tokens} tokens, {len(train_corpus.tagset)} tags...")
model = train_crf(train_corpus, epochs=60, lr=0.5, l2=1e-4)
print(f"feature alphabet: {len(model.feature_index)} features")

preds = [viterbi(model, s) for s in test_corpus.sentences]
result = evaluate(test_corpus, preds, model.tagset)
print(f"test accuracy: {result.accuracy:.3f} on {result.n_tokens} tokens")
print("errors by gold tag:", top_error_tags(result, 3))

# the decoded sequence is the argmax of the global score, not of per-token scores
sent = test_corpus.sentences[0]
decoded = viterbi(model, sent)
gold = [t.gold_tag for t in sent]
print(f"\nexample sentence ({len(sent)} tokens):")
print("  decoded:", [model.tagset.tags[i] for i in decoded])
print("  gold:   ", [model.tagset.tags[i] for i in gold])
print(f"  log-score(decoded) = {log_score(model, sent, decoded):.3f}")
print(f"  log-score(gold)    = {log_score(model, sent, gold):.3f}")
print(f"  log-partition      = {log_partition(model, sent):.3f}")
p_decoded = np.exp(log_score(model, sent, decoded) - log_partition(model, sent))
print(f"  p(decoded | sentence) = {p_decoded:.3f}")

unary, pairwise, _ = posteriors(model, sent)
print("  per-position marginals sum to", unary.sum(axis=1).round(12).tolist())
