#!/usr/bin/env python3
"""Walkthrough: the corpus data model, TSV round trips, and per-token features.

Creates a small tweet-like corpus, writes it in the two-column format, reads
it back, merges it with a second corpus, and shows what the feature extractor
sees for noisy tokens.
"""

import os

from priortag.corpus import merge, read_conll, write_conll
from priortag.crf import featurize_crf
from priortag.features import build_alphabets, encode, extract

from demo_util import make_corpus, out_dir

OUT = out_dir()

# A tiny annotated corpus: tweets are pre-tokenized, one (surface, tag) per token.
tweets = make_corpus([
    [("@anna", "MENTION"), ("das", "ART"), ("Haus", "NN"), ("brennt", "VVFIN"), ("!!", "SYM")],
    [("#wm2014", "HASHTAG"), ("Jogi", "NE"), ("lacht", "VVFIN")],
    [("schau", "VVIMP"), ("mal", "ADV"), ("https://t.co/x1", "URL")],
], name="tweets")

path = os.path.join(OUT, "tweets.tsv")
write_conll(tweets, None, path)
print(f"wrote {path}:")
print(open(path, encoding="utf-8").read())

back = read_conll(path)
print(f"read back: {len(back.sentences)} sentences, {back.n_tokens} tokens")
print(f"tagset in first-occurrence order: {back.tagset.tags}")

# Merging keeps the first corpus's tag order and remaps the second's indices.
news = make_corpus([
    [("Die", "ART"), ("Kanzlerin", "NN"), ("spricht", "VVFIN"), (".", "$.")],
], name="news")
both = merge(back, news)
print(f"\nmerged '{both.name}': {both.n_tokens} tokens, tagset {both.tagset.tags}")

# What the feature extractor produces for typical noisy tokens:
print("\nfeature bundles:")
for word in ("@anna", "#wm2014", "https://t.co/x1", "Haus2000", "GANZ"):
    b = extract(word)
    flags = [n for n in ("is_hashtag", "is_url", "is_mention", "has_symbol",
                         "starts_digit", "starts_upper") if getattr(b, n)]
    print(f"  {word!r:20} len={b.length_bucket:2} upper={b.n_upper_bucket} "
          f"digit={b.n_digit_bucket} flags={flags}")

# The same bundles as CRF feature strings and as neural embedding indices:
print("\nCRF feature strings for '#wm2014':",
      sorted(featurize_crf(back.sentences[1][0])))
alphabets = build_alphabets(back)
print("encoded indices for '#wm2014':", encode(extract("#wm2014"), alphabets))
print("encoded indices for an unseen shape ('xxxxxxxxxxxxxxxxxxxx'):",
      encode(extract("x" * 20), alphabets), "(0 = unseen)")
