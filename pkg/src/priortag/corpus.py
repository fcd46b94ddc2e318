"""Corpus data model and tab-separated (CoNLL-style) corpus I/O.

File format: one token per line as ``surface<TAB>tag`` (tag column optional),
sentences separated by a blank line, UTF-8, LF line endings with or without a
trailing CR.
"""

from __future__ import annotations

import os
from dataclasses import dataclass


class ParseError(ValueError):
    """Malformed corpus file; the message carries path and line number."""


@dataclass(frozen=True)
class Token:
    surface: str
    gold_tag: int | None = None

    def __post_init__(self):
        if not self.surface:
            raise ValueError("token surface must be non-empty")
        if any(ch.isspace() for ch in self.surface):
            raise ValueError(f"token surface contains whitespace: {self.surface!r}")


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("sentence must contain at least one token")

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]


class TagSet:
    """Ordered set of tag strings with a string->index bijection."""

    def __init__(self, tags=()):
        self.tags: tuple[str, ...] = tuple(tags)
        self._index: dict[str, int] = {}
        for i, tag in enumerate(self.tags):
            if not tag:
                raise ValueError("empty tag string")
            if tag in self._index:
                raise ValueError(f"duplicate tag string: {tag!r}")
            self._index[tag] = i

    def index(self, tag: str) -> int:
        return self._index[tag]

    def __contains__(self, tag: str) -> bool:
        return tag in self._index

    def __len__(self):
        return len(self.tags)

    def __eq__(self, other):
        return isinstance(other, TagSet) and self.tags == other.tags

    def __repr__(self):
        return f"TagSet({list(self.tags)!r})"


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[Sentence, ...]
    tagset: TagSet
    name: str = "corpus"

    def __post_init__(self):
        n = len(self.tagset)
        for sent in self.sentences:
            for tok in sent:
                if tok.gold_tag is not None and not (0 <= tok.gold_tag < n):
                    raise ValueError(
                        f"gold tag index {tok.gold_tag} out of range for "
                        f"tagset of size {n}"
                    )

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)


def sentence_from_pairs(pairs, tagset: TagSet) -> Sentence:
    """Build a Sentence from (surface, tag-string-or-None) pairs."""
    toks = []
    for surface, tag in pairs:
        idx = None if tag is None else tagset.index(tag)
        toks.append(Token(surface, idx))
    return Sentence(tuple(toks))


def read_conll(path, name: str | None = None) -> Corpus:
    """Read a two-column TSV corpus; the tagset is collected in first-occurrence order."""
    sentences: list[Sentence] = []
    tags: list[str] = []
    tag_index: dict[str, int] = {}
    current: list[Token] = []

    def flush():
        if current:
            sentences.append(Sentence(tuple(current)))
            current.clear()

    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if line.endswith("\r"):
                line = line[:-1]
            if line == "":
                flush()
                continue
            cols = line.split("\t")
            if len(cols) > 2:
                raise ParseError(
                    f"{path}:{lineno}: expected 1 or 2 tab-separated columns, got {len(cols)}"
                )
            surface = cols[0]
            if not surface:
                raise ParseError(f"{path}:{lineno}: empty token surface")
            if any(ch.isspace() for ch in surface):
                raise ParseError(f"{path}:{lineno}: token surface contains whitespace")
            if len(cols) == 2:
                tag = cols[1]
                if not tag:
                    raise ParseError(f"{path}:{lineno}: empty tag")
                if tag not in tag_index:
                    tag_index[tag] = len(tags)
                    tags.append(tag)
                current.append(Token(surface, tag_index[tag]))
            else:
                current.append(Token(surface))
    flush()
    if not sentences:
        raise ParseError(f"{path}: no sentences found")
    return Corpus(tuple(sentences), TagSet(tags), name or os.path.basename(str(path)))


def write_conll(corpus: Corpus, predictions, path, tagset: TagSet | None = None) -> None:
    """Write a corpus; `predictions` (per-sentence lists of tag indices) replaces column 2.

    Prediction indices are rendered through `tagset` (defaults to the corpus's own).
    """
    tagset = tagset if tagset is not None else corpus.tagset
    if predictions is not None:
        if len(predictions) != len(corpus.sentences):
            raise ValueError(
                f"predictions cover {len(predictions)} sentences, corpus has "
                f"{len(corpus.sentences)}"
            )
        for sent, pred in zip(corpus.sentences, predictions):
            if len(pred) != len(sent):
                raise ValueError("prediction length does not match sentence length")

    blocks = []
    for i, sent in enumerate(corpus.sentences):
        lines = []
        for j, tok in enumerate(sent):
            if predictions is not None:
                idx = predictions[i][j]
            else:
                idx = tok.gold_tag
            if idx is None:
                lines.append(tok.surface)
            else:
                lines.append(f"{tok.surface}\t{tagset.tags[idx]}")
        blocks.append("\n".join(lines))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n\n".join(blocks) + "\n")


def merge(a: Corpus, b: Corpus) -> Corpus:
    """Concatenate two corpora; the tagset is a's order followed by b's novel tags."""
    tags = list(a.tagset.tags)
    seen = set(tags)
    for tag in b.tagset.tags:
        if tag not in seen:
            seen.add(tag)
            tags.append(tag)
    union = TagSet(tags)
    remap = [union.index(t) for t in b.tagset.tags]
    remapped = []
    for sent in b.sentences:
        toks = tuple(
            Token(t.surface, None if t.gold_tag is None else remap[t.gold_tag])
            for t in sent
        )
        remapped.append(Sentence(toks))
    return Corpus(a.sentences + tuple(remapped), union, f"{a.name}+{b.name}")
