"""Feature-rich BiLSTM tagger: per-token input assembly, character BiLSTM encoder,
two stacked BiLSTMs, and a per-position softmax output."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor
from .corpus import Corpus, Sentence, TagSet
from .features import FEATURE_TYPES, Alphabet, FeatureAlphabets, build_alphabets, encode, extract
from .lexicon import lookup


@dataclass
class ArchConfig:
    word_emb_dim: int = 100
    char_emb_dim: int = 25
    char_hidden: int = 25       # per direction
    feat_emb_dim: int = 20
    lstm_hidden: int = 100      # per direction
    n_lstm_layers: int = 2      # fixed: the network stacks exactly two BiLSTMs
    dropout_lstm: float = 0.75
    dropout_input: float = 0.75
    lexicon_dims: tuple[int, ...] = ()

    def __post_init__(self):
        for name in ("word_emb_dim", "char_emb_dim", "char_hidden", "feat_emb_dim", "lstm_hidden"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.n_lstm_layers != 2:
            raise ValueError("the architecture is fixed at two stacked BiLSTMs")
        for name in ("dropout_lstm", "dropout_input"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValueError(f"{name} must be in [0, 1)")
        self.lexicon_dims = tuple(int(d) for d in self.lexicon_dims)

    @property
    def input_dim(self) -> int:
        return (
            self.word_emb_dim
            + 2 * self.char_hidden
            + self.feat_emb_dim
            + sum(self.lexicon_dims)
        )


@dataclass
class AlphabetSet:
    words: Alphabet          # lowercased surface forms, 0 = unknown
    chars: Alphabet          # characters of the original surfaces, 0 = unknown
    feats: FeatureAlphabets
    tags: TagSet


def build_alphabet_set(corpus: Corpus) -> AlphabetSet:
    words = Alphabet()
    chars = Alphabet()
    for sent in corpus.sentences:
        for tok in sent:
            words.add(tok.surface.lower())
            for ch in tok.surface:
                chars.add(ch)
    return AlphabetSet(words, chars, build_alphabets(corpus), corpus.tagset)


@dataclass
class ParamStore:
    """Named trainable tensors plus the alphabets and config they are shaped by."""

    arch: ArchConfig
    alphabets: AlphabetSet
    tensors: dict[str, Tensor] = field(default_factory=dict)

    def names(self) -> tuple[str, ...]:
        return tuple(self.tensors)

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def clone(self) -> "ParamStore":
        copies = {name: Tensor(t.data.copy()) for name, t in self.tensors.items()}
        return ParamStore(self.arch, self.alphabets, copies)

    def zero_grads(self) -> None:
        for t in self.tensors.values():
            t.grad = None


def expected_shapes(arch: ArchConfig, alphabets: AlphabetSet) -> dict[str, tuple[int, ...]]:
    """Canonical tensor-name -> shape map; definition order is the storage order."""
    shapes: dict[str, tuple[int, ...]] = {
        "word_emb": (len(alphabets.words), arch.word_emb_dim),
        "char_emb": (len(alphabets.chars), arch.char_emb_dim),
    }
    for name in FEATURE_TYPES:
        shapes[f"feat_emb_{name}"] = (len(alphabets.feats[name]), arch.feat_emb_dim)
    lstm_dims = (
        ("char", arch.char_emb_dim, arch.char_hidden),
        ("lstm1", arch.input_dim, arch.lstm_hidden),
        ("lstm2", 2 * arch.lstm_hidden, arch.lstm_hidden),
    )
    for prefix, d_in, hidden in lstm_dims:
        for direction in ("fw", "bw"):
            shapes[f"{prefix}_{direction}_W"] = (d_in + hidden, 4 * hidden)
            shapes[f"{prefix}_{direction}_b"] = (4 * hidden,)
    shapes["out_W"] = (2 * arch.lstm_hidden, len(alphabets.tags))
    shapes["out_b"] = (len(alphabets.tags),)
    return shapes


def init_params(arch: ArchConfig, alphabets: AlphabetSet, seed) -> ParamStore:
    """Glorot-uniform weights, uniform(-0.05, 0.05) embeddings, zero biases except
    every LSTM forget-gate bias, which starts at 1."""
    rng = np.random.default_rng(seed)
    tensors: dict[str, Tensor] = {}
    for name, shape in expected_shapes(arch, alphabets).items():
        if name.endswith("_b"):
            b = np.zeros(shape)
            if name != "out_b":
                hidden = shape[0] // 4
                b[hidden : 2 * hidden] = 1.0  # forget gate
            tensors[name] = Tensor(b)
        elif "emb" in name:
            tensors[name] = Tensor(rng.uniform(-0.05, 0.05, size=shape))
        else:
            limit = math.sqrt(6.0 / (shape[0] + shape[1]))
            tensors[name] = Tensor(rng.uniform(-limit, limit, size=shape))
    return ParamStore(arch, alphabets, tensors)


@dataclass
class SentenceEncoding:
    """Index-level view of one sentence, precomputable once per corpus."""

    word_ids: np.ndarray              # (T,)
    char_ids: np.ndarray              # (T, L) right-padded with 0
    char_mask: np.ndarray             # (T, L) float, 1 inside the word
    feat_ids: np.ndarray              # (T, len(FEATURE_TYPES))
    lex_rows: tuple[np.ndarray, ...]  # one (T, dim) block per lexicon, frozen
    gold: np.ndarray | None           # (T,) or None


def encode_sentence(params: ParamStore, sentence: Sentence, lexicons=()) -> SentenceEncoding:
    lexicons = tuple(lexicons)
    dims = tuple(lex.dim for lex in lexicons)
    if dims != params.arch.lexicon_dims:
        raise ValueError(
            f"lexicon dims {dims} do not match the architecture's {params.arch.lexicon_dims}"
        )
    al = params.alphabets
    T = len(sentence)
    word_ids = np.array([al.words.index(t.surface.lower()) for t in sentence], dtype=np.intp)
    L = max(len(t.surface) for t in sentence)
    char_ids = np.zeros((T, L), dtype=np.intp)
    char_mask = np.zeros((T, L))
    for i, tok in enumerate(sentence):
        for j, ch in enumerate(tok.surface):
            char_ids[i, j] = al.chars.index(ch)
            char_mask[i, j] = 1.0
    feat_ids = np.stack([encode(extract(t.surface), al.feats) for t in sentence])
    lex_rows = tuple(
        np.stack([lookup(lex, t.surface) for t in sentence]) for lex in lexicons
    )
    gold = None
    if all(t.gold_tag is not None for t in sentence):
        gold = np.array([t.gold_tag for t in sentence], dtype=np.intp)
    return SentenceEncoding(word_ids, char_ids, char_mask, feat_ids, lex_rows, gold)


def encode_corpus(params: ParamStore, corpus: Corpus, lexicons=()) -> list[SentenceEncoding]:
    return [encode_sentence(params, s, lexicons) for s in corpus.sentences]


def _lstm_step(x, h, c, W, b, tape):
    hidden = h.data.shape[-1]
    gates = ad.add(ad.matmul(ad.concat([x, h], tape), W, tape), b, tape)
    i = ad.sigmoid(ad.slice_cols(gates, 0, hidden, tape), tape)
    f = ad.sigmoid(ad.slice_cols(gates, hidden, 2 * hidden, tape), tape)
    u = ad.tanh(ad.slice_cols(gates, 2 * hidden, 3 * hidden, tape), tape)
    o = ad.sigmoid(ad.slice_cols(gates, 3 * hidden, 4 * hidden, tape), tape)
    c2 = ad.add(ad.mul(f, c, tape), ad.mul(i, u, tape), tape)
    h2 = ad.mul(o, ad.tanh(c2, tape), tape)
    return h2, c2


def _char_encoder(params: ParamStore, char_ids: np.ndarray, char_mask: np.ndarray,
                  tape: Tape | None) -> Tensor:
    """All tokens of a sentence at once; returns (T, 2*char_hidden) final states."""
    emb = params["char_emb"]
    T, L = char_ids.shape
    hidden = params.arch.char_hidden
    finals = []
    for direction in ("fw", "bw"):
        W, b = params[f"char_{direction}_W"], params[f"char_{direction}_b"]
        h = Tensor(np.zeros((T, hidden)))
        c = Tensor(np.zeros((T, hidden)))
        steps = range(L) if direction == "fw" else range(L - 1, -1, -1)
        for t in steps:
            x = ad.embedding_lookup(emb, char_ids[:, t], tape)
            h2, c2 = _lstm_step(x, h, c, W, b, tape)
            col = char_mask[:, t : t + 1]
            if col.all():
                h, c = h2, c2
            else:
                # freeze state on padded positions (both h and c: the backward
                # direction enters real characters after padding)
                m = Tensor(col)
                keep = Tensor(1.0 - col)
                h = ad.add(ad.mul(m, h2, tape), ad.mul(keep, h, tape), tape)
                c = ad.add(ad.mul(m, c2, tape), ad.mul(keep, c, tape), tape)
        finals.append(h)
    return ad.concat(finals, tape)


def encode_chars(params: ParamStore, surface: str, tape: Tape | None = None) -> Tensor:
    """Character BiLSTM encoding of one word: (1, 2*char_hidden), the
    concatenation of the final forward and final backward states."""
    if not surface:
        raise ValueError("cannot encode an empty surface")
    ids = np.array([[params.alphabets.chars.index(ch) for ch in surface]], dtype=np.intp)
    mask = np.ones((1, len(surface)))
    return _char_encoder(params, ids, mask, tape)


def _bilstm(params: ParamStore, prefix: str, X: Tensor, tape: Tape | None) -> Tensor:
    T = X.data.shape[0]
    hidden = params[f"{prefix}_fw_W"].data.shape[1] // 4
    outputs = []
    for direction in ("fw", "bw"):
        W, b = params[f"{prefix}_{direction}_W"], params[f"{prefix}_{direction}_b"]
        h = Tensor(np.zeros((1, hidden)))
        c = Tensor(np.zeros((1, hidden)))
        outs: list = [None] * T
        steps = range(T) if direction == "fw" else range(T - 1, -1, -1)
        for t in steps:
            h, c = _lstm_step(ad.row(X, t, tape), h, c, W, b, tape)
            outs[t] = h
        outputs.append(ad.vstack(outs, tape) if T > 1 else outs[0])
    return ad.concat(outputs, tape)


def assemble_input(params: ParamStore, sentence: Sentence, lexicons=(), train: bool = False,
                   rng=None, tape: Tape | None = None,
                   encoding: SentenceEncoding | None = None) -> Tensor:
    """Per-token input rows: word embedding | char encoding | summed feature
    embeddings | one frozen block per lexicon. Input dropout at train time."""
    enc = encoding if encoding is not None else encode_sentence(params, sentence, lexicons)
    parts = [ad.embedding_lookup(params["word_emb"], enc.word_ids, tape)]
    parts.append(_char_encoder(params, enc.char_ids, enc.char_mask, tape))
    featv = None
    for k, name in enumerate(FEATURE_TYPES):
        e = ad.embedding_lookup(params[f"feat_emb_{name}"], enc.feat_ids[:, k], tape)
        featv = e if featv is None else ad.add(featv, e, tape)
    parts.append(featv)
    for block in enc.lex_rows:
        parts.append(Tensor(block))
    x = ad.concat(parts, tape)
    return ad.dropout(x, params.arch.dropout_input, train, rng, tape)


def _logits(params, sentence, lexicons, train, rng, tape, encoding):
    h = assemble_input(params, sentence, lexicons, train, rng, tape, encoding)
    h = _bilstm(params, "lstm1", h, tape)
    h = ad.dropout(h, params.arch.dropout_lstm, train, rng, tape)
    h = _bilstm(params, "lstm2", h, tape)
    h = ad.dropout(h, params.arch.dropout_lstm, train, rng, tape)
    return ad.add(ad.matmul(h, params["out_W"], tape), params["out_b"], tape)


def forward_tagger(params: ParamStore, sentence: Sentence, lexicons=(), train: bool = False,
                   rng=None, tape: Tape | None = None,
                   encoding: SentenceEncoding | None = None) -> Tensor:
    """(T, |tagset|) matrix of tag probabilities; rows sum to 1."""
    return ad.softmax(_logits(params, sentence, lexicons, train, rng, tape, encoding), tape)


def loss(params: ParamStore, sentence: Sentence, lexicons=(), train: bool = False,
         rng=None, tape: Tape | None = None,
         encoding: SentenceEncoding | None = None) -> Tensor:
    """Cross-entropy: mean over positions of -log p(gold tag)."""
    enc = encoding if encoding is not None else encode_sentence(params, sentence, lexicons)
    if enc.gold is None:
        raise ValueError("loss requires gold tags on every token")
    logits = _logits(params, sentence, lexicons, train, rng, tape, enc)
    logp = ad.log_softmax(logits, tape)
    picked = ad.pick(logp, enc.gold, tape)
    return ad.scale(ad.sum_all(picked, tape), -1.0 / len(enc.gold), tape)


def decode(params: ParamStore, sentence: Sentence, lexicons=(),
           encoding: SentenceEncoding | None = None) -> list[int]:
    """Per-position argmax tag indices; ties go to the lower tag index."""
    probs = forward_tagger(params, sentence, lexicons, train=False, encoding=encoding)
    return [int(i) for i in np.argmax(probs.data, axis=1)]
