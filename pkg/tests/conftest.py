import numpy as np
import pytest

from priortag.corpus import Corpus, Sentence, TagSet, Token


def make_corpus(rows, tags=None, name="fixture"):
    """rows: list of [(surface, tag_string), ...] per sentence."""
    if tags is None:
        tags = []
        for sent in rows:
            for _, tag in sent:
                if tag is not None and tag not in tags:
                    tags.append(tag)
    tagset = TagSet(tags)
    sentences = []
    for sent in rows:
        toks = tuple(
            Token(surface, None if tag is None else tagset.index(tag))
            for surface, tag in sent
        )
        sentences.append(Sentence(toks))
    return Corpus(tuple(sentences), tagset, name)


@pytest.fixture
def tiny_corpus():
    return make_corpus([
        [("Das", "ART"), ("Haus", "NN"), ("brennt", "VV")],
        [("@Max", "MENTION"), ("lacht", "VV"), ("#yolo", "HASH")],
        [("Die", "ART"), ("Katze", "NN"), ("schläft", "VV"), ("!", "SYM")],
        [("Er", "PPER"), ("sieht", "VV"), ("das", "ART"), ("Haus", "NN")],
        [("https://t.co/ab", "URL"), ("kaputt", "ADJ")],
    ])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
