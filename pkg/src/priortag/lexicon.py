"""Pretrained word vectors: text-format loading and total lookup with subword fallback.

Vector files are whitespace-separated ``word v1 ... vD`` rows, optionally
preceded by a ``count dim`` header. Subword tables use the same format with
``<``/``>`` boundary markers allowed in the keys.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class VectorFormatError(ValueError):
    """Malformed vector file; the message carries path and line number."""


@dataclass
class SubwordTable:
    table: dict[str, np.ndarray]
    min_n: int
    max_n: int


@dataclass
class Lexicon:
    dim: int
    table: dict[str, np.ndarray]
    subword: SubwordTable | None = None


def _parse_rows(path):
    """Yield (lineno, key, vector) rows; skips a leading count/dim header."""
    with open(path, encoding="utf-8") as fh:
        dim = None
        for lineno, raw in enumerate(fh, 1):
            parts = raw.split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2:
                try:
                    int(parts[0]), int(parts[1])
                    continue  # header line
                except ValueError:
                    pass
            key = parts[0]
            try:
                vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError:
                raise VectorFormatError(
                    f"{path}:{lineno}: non-numeric vector component"
                ) from None
            if vec.size == 0:
                raise VectorFormatError(f"{path}:{lineno}: row has no vector components")
            if not np.all(np.isfinite(vec)):
                raise VectorFormatError(f"{path}:{lineno}: non-finite vector component")
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise VectorFormatError(
                    f"{path}:{lineno}: expected dimension {dim}, got {vec.size}"
                )
            yield lineno, key, vec


def load_text_vectors(path, subword_path=None, min_n: int = 3, max_n: int = 6) -> Lexicon:
    """Load a text vector file; optionally attach a char n-gram table for OOV lookup."""
    table = {}
    dim = None
    for _, key, vec in _parse_rows(path):
        table[key] = vec
        dim = vec.size
    if dim is None:
        raise VectorFormatError(f"{path}: no vector rows found")

    subword = None
    if subword_path is not None:
        if not (1 <= min_n <= max_n):
            raise ValueError(f"invalid n-gram bounds ({min_n}, {max_n})")
        sub = {}
        for lineno, key, vec in _parse_rows(subword_path):
            if vec.size != dim:
                raise VectorFormatError(
                    f"{subword_path}:{lineno}: subword dimension {vec.size} "
                    f"does not match lexicon dimension {dim}"
                )
            sub[key] = vec
        subword = SubwordTable(sub, min_n, max_n)
    return Lexicon(dim=int(dim), table=table, subword=subword)


def char_ngrams(word: str, min_n: int, max_n: int) -> list[str]:
    """All contiguous character n-grams of `<word>` with min_n <= n <= max_n."""
    padded = f"<{word}>"
    return [
        padded[i : i + n]
        for n in range(min_n, max_n + 1)
        for i in range(len(padded) - n + 1)
    ]


def lookup(lex: Lexicon, surface: str) -> np.ndarray:
    """Vector for a surface form; total function, never NaN.

    Exact match on the lowercased form first; otherwise the mean of the known
    n-gram vectors of the padded word; otherwise the all-zero vector.
    """
    word = surface.lower()
    vec = lex.table.get(word)
    if vec is not None:
        return vec
    if lex.subword is not None:
        hits = [
            lex.subword.table[g]
            for g in char_ngrams(word, lex.subword.min_n, lex.subword.max_n)
            if g in lex.subword.table
        ]
        if hits:
            return np.mean(hits, axis=0)
    return np.zeros(lex.dim, dtype=np.float64)
