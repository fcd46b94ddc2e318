#!/usr/bin/env python3
"""Walkthrough: the BiLSTM tagger end to end.

Builds alphabets from a synthetic corpus, trains with Adam and early stopping,
then inspects the model: input assembly widths, per-position tag distributions,
and the character encoder's view of unseen words.
"""

import numpy as np

from priortag.tagger import (ArchConfig, assemble_input, build_alphabet_set, decode,
                             encode_chars, forward_tagger, init_params)
from priortag.training import TrainConfig, corpus_accuracy, train
from priortag.synthetic import make_source_generator, sample_corpus

gen = make_source_generator(seed=2, vocab_size=60, n_tags=5, len_range=(4, 9))
train_corpus = sample_corpus(gen, 120, seed=20, name="nn-train")
dev_corpus = sample_corpus(gen, 40, seed=21, name="nn-dev")
test_corpus = sample_corpus(gen, 40, seed=22, name="nn-test")

arch = ArchConfig(word_emb_dim=16, char_emb_dim=6, char_hidden=6, feat_emb_dim=8,
                  lstm_hidden=16, dropout_lstm=0.1, dropout_input=0.1)

# what one training example looks like as network input
probe = init_params(arch, build_alphabet_set(train_corpus), seed=0)
sent = train_corpus.sentences[0]
x = assemble_input(probe, sent)
print(f"input matrix for a {len(sent)}-token sentence: {x.shape} "
      f"(word {arch.word_emb_dim} + char {2 * arch.char_hidden} "
      f"+ features {arch.feat_emb_dim})")

config = TrainConfig(lr=0.01, max_epochs=25, patience=5, seed=3)
print("training...")
best, report = train(train_corpus, dev_corpus, arch, config)
for e in report.epochs[:3]:
    print(f"  epoch {e.epoch}: loss={e.train_loss:.3f} dev_acc={e.dev_accuracy:.3f}")
print(f"  ... best epoch {report.best_epoch} "
      f"(dev {report.best_dev_accuracy:.3f}, stopped_early={report.stopped_early})")
print(f"test accuracy: {corpus_accuracy(best, test_corpus):.3f}")

sent = test_corpus.sentences[0]
probs = forward_tagger(best, sent)
tags = best.alphabets.tags.tags
print(f"\nper-position distributions (rows sum to {probs.data.sum(axis=1)[0]:.12f}):")
for tok, row, pred in zip(sent, probs.data, decode(best, sent)):
    top = np.argsort(row)[::-1][:2]
    print(f"  {tok.surface!r:12} -> {tags[pred]:4} "
          + "  ".join(f"{tags[k]}:{row[k]:.2f}" for k in top))

# the char encoder gives unseen words a representation too
for word in ("zzzzq", sent[0].surface):
    vec = encode_chars(best, word)
    print(f"char encoding of {word!r}: shape {vec.shape}, norm {np.linalg.norm(vec.data):.3f}")
