#!/usr/bin/env python3
"""Walkthrough: domain adaptation with a prior-weight penalty.

Trains a source model on plentiful synthetic data, then adapts to a small
shifted target domain by penalizing deviation from the source weights
(penalty = lambda * ||W - W_prior||^2). Sweeps lambda and prints the curve:
too little pull wastes the prior, too much pins the model to the source.

Runs in a minute or two at these sizes.
"""

import os

from priortag.evaluation import SweepSetup, sweep_lambda
from priortag.synthetic import make_source_generator, perturb_generator, sample_corpus
from priortag.tagger import ArchConfig
from priortag.training import TrainConfig, train
from priortag.transfer import align_prior, save_checkpoint

from demo_util import out_dir

OUT = out_dir()

source_gen = make_source_generator(seed=7, vocab_size=80, n_tags=6, len_range=(4, 9))
target_gen = perturb_generator(source_gen, seed=8, emission_shift=0.2,
                               n_extra_words=3, n_extra_tags=1)

source_train = sample_corpus(source_gen, 400, seed=30, name="source-train")
source_dev = sample_corpus(source_gen, 60, seed=31, name="source-dev")
target_train = sample_corpus(target_gen, 16, seed=32, name="target-train")
target_dev = sample_corpus(target_gen, 40, seed=33, name="target-dev")
target_test = sample_corpus(target_gen, 40, seed=34, name="target-test")

arch = ArchConfig(word_emb_dim=12, char_emb_dim=4, char_hidden=4, feat_emb_dim=6,
                  lstm_hidden=12, dropout_lstm=0.0, dropout_input=0.0)

print(f"source domain: {source_train.n_tokens} training tokens, "
      f"{len(source_gen.tags)} tags")
print(f"target domain: only {target_train.n_tokens} training tokens, "
      f"{len(target_gen.tags)} tags (one novel)")

prior, source_report = train(source_train, source_dev, arch,
                             TrainConfig(lr=0.005, max_epochs=6, patience=3, seed=40))
print(f"source model dev accuracy: {source_report.best_dev_accuracy:.3f}")
ckpt = os.path.join(OUT, "source.ckpt")
save_checkpoint(prior, ckpt)
print(f"saved the prior checkpoint to {ckpt}")

config = TrainConfig(lr=0.01, max_epochs=20, patience=5, seed=41)
setup = SweepSetup(target_train, target_dev, target_test, arch, config, prior)
result = sweep_lambda(setup, [0.0, 1e-4, 1e-3, 1e-2, 0.1])

print("\n  lambda    dev      test")
for lam, dev, test in result.rows:
    marker = "  <- selected on dev" if lam == result.best_lambda else ""
    print(f"  {lam:<8g}  {dev:.3f}    {test:.3f}{marker}")

by_lambda = {lam: test for lam, _, test in result.rows}
gain = by_lambda[result.best_lambda] - by_lambda[0.0]
print(f"\ntest gain over no adaptation: {gain:+.3f}")

# tag novel to the target domain: its output row has no prior and trains freely
best_cfg = TrainConfig(lr=0.01, max_epochs=20, patience=5, seed=41,
                       lambda_=result.best_lambda)
adapted, _ = train(target_train, target_dev, arch, best_cfg, prior=prior)
_, mask = align_prior(prior, adapted)
novel = target_gen.tags[-1]
col = adapted.alphabets.tags.index(novel)
print(f"prior coverage of output column for novel tag {novel!r}: "
      f"{mask['out_W'][:, col].sum():.0f} of {mask['out_W'].shape[0]} entries (excluded)")
