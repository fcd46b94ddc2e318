"""Synthetic two-domain corpora: an HMM-style generator (hidden states emit
tags, tags emit words) plus a perturbed variant standing in for a related
target domain (shifted emissions, extra vocabulary, extra tags)."""

from __future__ import annotations

import string
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, Sentence, TagSet, Token
from .lexicon import Lexicon


@dataclass
class TagGenerator:
    name: str
    tags: tuple[str, ...]
    words: tuple[str, ...]
    start: np.ndarray      # (S,)
    trans: np.ndarray      # (S, S)
    state_tag: np.ndarray  # (S, K)
    tag_word: np.ndarray   # (K, V)
    len_range: tuple[int, int]


def _random_words(rng, count, taken=(), min_len=3, max_len=8):
    words = []
    seen = set(taken)
    letters = list(string.ascii_lowercase)
    while len(words) < count:
        n = int(rng.integers(min_len, max_len + 1))
        w = "".join(rng.choice(letters, size=n))
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


def make_source_generator(seed=0, n_states=3, n_tags=8, vocab_size=200,
                          shared_fraction=0.12, own_mass=0.85, tag_sharpness=0.85,
                          stickiness=0.75, len_range=(6, 12)) -> TagGenerator:
    """Structured generator: states cycle stickily, each state favors its home
    tags, each tag concentrates on its own word block plus a shared ambiguous
    pool that only context can resolve."""
    rng = np.random.default_rng(seed)
    words = _random_words(rng, vocab_size)
    n_shared = max(2, int(round(vocab_size * shared_fraction)))
    n_own = vocab_size - n_shared
    blocks = np.array_split(np.arange(n_own), n_tags)
    shared = np.arange(n_own, vocab_size)

    tag_word = np.zeros((n_tags, vocab_size))
    for k in range(n_tags):
        own = rng.random(len(blocks[k])) + 0.35
        tag_word[k, blocks[k]] = own_mass * own / own.sum()
        pool = rng.random(n_shared) + 0.35
        tag_word[k, shared] = (1.0 - own_mass) * pool / pool.sum()

    state_tag = np.full((n_states, n_tags), 0.0)
    for k in range(n_tags):
        state_tag[k % n_states, k] = 1.0
    for s in range(n_states):
        home = state_tag[s] > 0
        n_home = home.sum()
        row = np.where(home, tag_sharpness / n_home, (1.0 - tag_sharpness) / (n_tags - n_home))
        state_tag[s] = row / row.sum()

    trans = np.full((n_states, n_states), (1.0 - stickiness) / (n_states - 1))
    for s in range(n_states):
        trans[s, (s + 1) % n_states] = stickiness
    start = np.full(n_states, 1.0 / n_states)
    tags = tuple(f"T{k}" for k in range(n_tags))
    return TagGenerator("source", tags, tuple(words), start, trans, state_tag, tag_word, len_range)


def perturb_generator(gen: TagGenerator, seed=1, emission_shift=0.2, n_extra_words=5,
                      n_extra_tags=2, extra_tag_mass=0.12, name="target") -> TagGenerator:
    """Domain-shifted copy: every tag's emission table is mixed with a random
    one (`emission_shift` of the mass), extra vocabulary appears, and extra
    tags with their own small word supports enter some states."""
    rng = np.random.default_rng(seed)
    n_tags, vocab = gen.tag_word.shape
    extra_words = _random_words(rng, n_extra_words, taken=gen.words)
    words = gen.words + tuple(extra_words)
    n_states = gen.trans.shape[0]

    new_k = n_tags + n_extra_tags
    tag_word = np.zeros((new_k, len(words)))
    for k in range(n_tags):
        support = np.flatnonzero(gen.tag_word[k] > 0)
        noise = rng.dirichlet(np.ones(len(support)))
        tag_word[k, support] = (1.0 - emission_shift) * gen.tag_word[k, support] \
            + emission_shift * noise
    # each old tag may also pick up one extra word with a small probability
    for j in range(n_extra_words):
        k = int(rng.integers(0, n_tags))
        tag_word[k, vocab + j] = 0.02
    # extra tags: a few extra words plus a couple of borrowed frequent words
    for x in range(n_extra_tags):
        k = n_tags + x
        own = [vocab + j for j in range(n_extra_words) if j % n_extra_tags == x]
        borrowed = rng.integers(0, vocab, size=2)
        support = np.array(list(own) + list(borrowed))
        weights = rng.random(len(support)) + 0.5
        tag_word[k, support] = weights
    tag_word /= tag_word.sum(axis=1, keepdims=True)

    state_tag = np.zeros((n_states, new_k))
    state_tag[:, :n_tags] = gen.state_tag * (1.0 - extra_tag_mass)
    for x in range(n_extra_tags):
        state_tag[x % n_states, n_tags + x] += extra_tag_mass
    state_tag /= state_tag.sum(axis=1, keepdims=True)

    tags = gen.tags + tuple(f"X{n_tags + x}" for x in range(n_extra_tags))
    return TagGenerator(name, tags, words, gen.start.copy(), gen.trans.copy(),
                        state_tag, tag_word, gen.len_range)


def sample_corpus(gen: TagGenerator, n_sentences: int, seed, name=None) -> Corpus:
    rng = np.random.default_rng(seed)
    n_states = gen.trans.shape[0]
    sentences = []
    for _ in range(n_sentences):
        length = int(rng.integers(gen.len_range[0], gen.len_range[1] + 1))
        state = int(rng.choice(n_states, p=gen.start))
        toks = []
        for _ in range(length):
            tag = int(rng.choice(len(gen.tags), p=gen.state_tag[state]))
            word = gen.words[int(rng.choice(len(gen.words), p=gen.tag_word[tag]))]
            toks.append(Token(word, tag))
            state = int(rng.choice(n_states, p=gen.trans[state]))
        sentences.append(Sentence(tuple(toks)))
    return Corpus(tuple(sentences), TagSet(gen.tags), name or gen.name)


def clustered_lexicon(gen: TagGenerator, dim=10, noise=0.35, seed=0) -> Lexicon:
    """Stand-in for pretrained embeddings: each word sits near the center of
    its dominant tag, so the vectors carry distributional (syntactic) signal."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(len(gen.tags), dim))
    table = {}
    for w, word in enumerate(gen.words):
        k = int(np.argmax(gen.tag_word[:, w]))
        table[word] = centers[k] + noise * rng.normal(size=dim)
    return Lexicon(dim=dim, table=table)
