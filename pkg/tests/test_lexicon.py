import numpy as np
import pytest

from priortag.lexicon import (VectorFormatError, char_ngrams, load_text_vectors,
                              lookup)


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_load_basic(tmp_path):
    lex = load_text_vectors(_write(tmp_path / "v.txt", "a 1.0 2.0\nb 3.0 4.0\n"))
    assert lex.dim == 2
    assert len(lex.table) == 2
    assert np.allclose(lex.table["a"], [1.0, 2.0])


def test_load_header_skipped(tmp_path):
    lex = load_text_vectors(_write(tmp_path / "v.txt", "2 2\na 1 2\nb 3 4\n"))
    assert lex.dim == 2 and len(lex.table) == 2
    # a first line that is not two ints is data, not a header
    lex = load_text_vectors(_write(tmp_path / "w.txt", "a 1.5\nb 2.5\n"))
    assert lex.dim == 1 and len(lex.table) == 2


def test_load_round_trip_every_word(tmp_path, rng):
    words = [f"word{i}" for i in range(40)]
    vecs = rng.normal(size=(40, 5))
    lines = [f"{w} " + " ".join(repr(float(x)) for x in row) for w, row in zip(words, vecs)]
    lex = load_text_vectors(_write(tmp_path / "v.txt", "\n".join(lines) + "\n"))
    for w, row in zip(words, vecs):
        assert np.array_equal(lookup(lex, w), row)


@pytest.mark.parametrize("content,fragment", [
    ("a 1.0 2.0\nb 3.0\n", ":2"),
    ("a 1.0\nb x\n", ":2"),
    ("a nan\n", ":1"),
    ("", "no vector rows"),
])
def test_load_errors(tmp_path, content, fragment):
    with pytest.raises(VectorFormatError) as err:
        load_text_vectors(_write(tmp_path / "bad.txt", content))
    assert fragment in str(err.value)


def test_lookup_exact_case_insensitive(tmp_path):
    lex = load_text_vectors(_write(tmp_path / "v.txt", "haus 1 2 3\n"))
    assert np.array_equal(lookup(lex, "Haus"), [1, 2, 3])
    assert np.array_equal(lookup(lex, "HAUS"), [1, 2, 3])


def test_lookup_zero_fallback(tmp_path):
    lex = load_text_vectors(_write(tmp_path / "v.txt", "a 1 2\n"))
    assert np.array_equal(lookup(lex, "missing"), [0.0, 0.0])


def test_char_ngrams():
    assert char_ngrams("ab", 3, 3) == ["<ab", "ab>"]
    assert char_ngrams("ab", 2, 3) == ["<a", "ab", "b>", "<ab", "ab>"]


def test_lookup_subword_mean(tmp_path):
    # hand-enumerated: 3-grams of "<ab>" are "<ab" and "ab>", mean is (1, 1)
    vec = _write(tmp_path / "v.txt", "other 9 9\n")
    sub = _write(tmp_path / "s.txt", "<ab 2 0\nab> 0 2\n")
    lex = load_text_vectors(vec, subword_path=sub, min_n=3, max_n=3)
    assert np.array_equal(lookup(lex, "ab"), [1.0, 1.0])
    assert np.array_equal(lookup(lex, "AB"), [1.0, 1.0])


def test_lookup_subword_no_hits_is_zero(tmp_path):
    vec = _write(tmp_path / "v.txt", "other 9 9\n")
    sub = _write(tmp_path / "s.txt", "<ab 2 0\n")
    lex = load_text_vectors(vec, subword_path=sub, min_n=3, max_n=3)
    assert np.array_equal(lookup(lex, "zzzz"), [0.0, 0.0])


def test_lookup_never_nan_right_length(tmp_path, rng):
    lex = load_text_vectors(_write(tmp_path / "v.txt", "a 1 2 3\n"))
    pool = "abcxyz#@🙂"
    for _ in range(100):
        n = int(rng.integers(1, 8))
        word = "".join(rng.choice(list(pool), size=n))
        v = lookup(lex, word)
        assert v.shape == (3,)
        assert np.all(np.isfinite(v))


def test_subword_dim_mismatch(tmp_path):
    vec = _write(tmp_path / "v.txt", "a 1 2\n")
    sub = _write(tmp_path / "s.txt", "<ab 1 2 3\n")
    with pytest.raises(VectorFormatError):
        load_text_vectors(vec, subword_path=sub)
