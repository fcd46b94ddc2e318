#!/usr/bin/env python3
"""Walkthrough: comparing two taggers with the exact sign test, plus reports.

Trains the CRF baseline and the neural tagger on the same synthetic data,
evaluates both, and asks whether the accuracy difference is significant:
the test looks only at tokens where exactly one system is correct.
"""

import os

from priortag.crf import train_crf, viterbi
from priortag.evaluation import binomial_test, eval_csv, eval_report, evaluate
from priortag.synthetic import make_source_generator, sample_corpus
from priortag.tagger import ArchConfig, decode
from priortag.training import TrainConfig, train

from demo_util import out_dir

OUT = out_dir()

gen = make_source_generator(seed=4, vocab_size=60, n_tags=5, len_range=(4, 9))
train_corpus = sample_corpus(gen, 120, seed=50, name="train")
dev_corpus = sample_corpus(gen, 40, seed=51, name="dev")
test_corpus = sample_corpus(gen, 60, seed=52, name="test")

crf = train_crf(train_corpus, epochs=60, lr=0.5, l2=1e-4)
crf_preds = [viterbi(crf, s) for s in test_corpus.sentences]

arch = ArchConfig(word_emb_dim=16, char_emb_dim=6, char_hidden=6, feat_emb_dim=8,
                  lstm_hidden=16, dropout_lstm=0.1, dropout_input=0.1)
neural, _ = train(train_corpus, dev_corpus, arch,
                  TrainConfig(lr=0.01, max_epochs=25, patience=5, seed=6))
nn_preds = [decode(neural, s) for s in test_corpus.sentences]

crf_result = evaluate(test_corpus, crf_preds, crf.tagset)
nn_result = evaluate(test_corpus, nn_preds, neural.alphabets.tags)
print(f"CRF accuracy:    {crf_result.accuracy:.3f}")
print(f"neural accuracy: {nn_result.accuracy:.3f}")

gold = [test_corpus.tagset.tags[t.gold_tag] for s in test_corpus.sentences for t in s]
a = [crf.tagset.tags[i] for p in crf_preds for i in p]
b = [neural.alphabets.tags.tags[i] for p in nn_preds for i in p]
only_a = sum(1 for x, y, g in zip(a, b, gold) if x == g and y != g)
only_b = sum(1 for x, y, g in zip(a, b, gold) if y == g and x != g)
p = binomial_test(a, b, gold)
print(f"\ndiscordant tokens: {only_a} favor the CRF, {only_b} favor the neural model")
print(f"two-sided exact sign test: p = {p:.6f}"
      + ("  (significant at 0.05)" if p < 0.05 else "  (not significant at 0.05)"))

report_path = os.path.join(OUT, "neural_report.txt")
with open(report_path, "w", encoding="utf-8") as fh:
    fh.write(eval_report(nn_result))
csv_path = os.path.join(OUT, "neural_confusion.csv")
with open(csv_path, "w", encoding="utf-8") as fh:
    fh.write(eval_csv(nn_result))
print(f"\nwrote {report_path} and {csv_path}")
print("\n" + eval_report(nn_result))
