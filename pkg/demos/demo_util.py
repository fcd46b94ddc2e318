"""Shared helpers for the demo scripts."""

import os

from priortag.corpus import Corpus, Sentence, TagSet, Token


def out_dir():
    path = os.path.join(os.path.dirname(os.path.abspath(__file__)), "demo_output")
    os.makedirs(path, exist_ok=True)
    return path


def make_corpus(rows, name="demo"):
    """rows: list of [(surface, tag), ...] per sentence; tagset from first occurrence."""
    tags = []
    for sent in rows:
        for _, tag in sent:
            if tag not in tags:
                tags.append(tag)
    tagset = TagSet(tags)
    sentences = tuple(
        Sentence(tuple(Token(w, tagset.index(t)) for w, t in sent)) for sent in rows
    )
    return Corpus(sentences, tagset, name)
