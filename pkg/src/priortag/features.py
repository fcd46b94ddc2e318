"""Per-token categorical features used by the CRF baseline and the neural feature embeddings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LENGTH_CAP = 20
COUNT_CAP = 10
URL_PREFIXES = ("http://", "https://", "www.")

# Feature types that get their own embedding alphabet; the lowercased form is
# carried by the word-embedding channel instead.
FEATURE_TYPES = (
    "length",
    "n_upper",
    "n_digit",
    "is_hashtag",
    "is_url",
    "is_mention",
    "has_symbol",
    "starts_digit",
    "starts_upper",
)


@dataclass(frozen=True)
class FeatureBundle:
    lower: str
    length_bucket: int
    n_upper_bucket: int
    n_digit_bucket: int
    is_hashtag: bool
    is_url: bool
    is_mention: bool
    has_symbol: bool
    starts_digit: bool
    starts_upper: bool

    def values(self) -> tuple:
        """Feature values in FEATURE_TYPES order."""
        return (
            self.length_bucket,
            self.n_upper_bucket,
            self.n_digit_bucket,
            self.is_hashtag,
            self.is_url,
            self.is_mention,
            self.has_symbol,
            self.starts_digit,
            self.starts_upper,
        )


def _is_upper_letter(ch: str) -> bool:
    return ch.isalpha() and ch.isupper()


def extract(surface: str) -> FeatureBundle:
    """Compute the feature bundle for one token. Pure; raises on empty input."""
    if not surface:
        raise ValueError("cannot extract features from an empty token")
    lower = surface.lower()
    first = surface[0]
    return FeatureBundle(
        lower=lower,
        length_bucket=min(len(surface), LENGTH_CAP),
        n_upper_bucket=min(sum(1 for c in surface if _is_upper_letter(c)), COUNT_CAP),
        n_digit_bucket=min(sum(1 for c in surface if c.isdigit()), COUNT_CAP),
        is_hashtag=first == "#" and len(surface) > 1,
        is_mention=first == "@" and len(surface) > 1,
        is_url=lower.startswith(URL_PREFIXES),
        has_symbol=any(
            not (c.isalpha() or c.isdigit() or c in "#@-") for c in surface
        ),
        starts_digit=first.isdigit(),
        starts_upper=_is_upper_letter(first),
    )


class Alphabet:
    """Value -> index bijection over observed values; index 0 is reserved for unseen."""

    def __init__(self, values=()):
        self._values: list = []
        self._index: dict = {}
        for v in values:
            self.add(v)

    def add(self, value) -> int:
        idx = self._index.get(value)
        if idx is None:
            idx = len(self._values) + 1
            self._index[value] = idx
            self._values.append(value)
        return idx

    def index(self, value) -> int:
        """Trained index of `value`, or 0 when unseen."""
        return self._index.get(value, 0)

    def value(self, idx: int):
        """Inverse of index() for idx >= 1."""
        return self._values[idx - 1]

    @property
    def values(self) -> tuple:
        """Observed values in index order (index 1 first)."""
        return tuple(self._values)

    def __len__(self):
        # includes the reserved unseen slot
        return len(self._values) + 1

    def __eq__(self, other):
        return isinstance(other, Alphabet) and self._values == other._values

    def __repr__(self):
        return f"Alphabet({self._values!r})"


@dataclass
class FeatureAlphabets:
    """One Alphabet per feature type, built from training data."""

    alphabets: dict[str, Alphabet]

    def __getitem__(self, feature_type: str) -> Alphabet:
        return self.alphabets[feature_type]

    def __eq__(self, other):
        return isinstance(other, FeatureAlphabets) and self.alphabets == other.alphabets


def build_alphabets(corpus) -> FeatureAlphabets:
    """Collect the observed value set of every feature type over a corpus."""
    alphabets = {name: Alphabet() for name in FEATURE_TYPES}
    for sent in corpus.sentences:
        for tok in sent:
            bundle = extract(tok.surface)
            for name, value in zip(FEATURE_TYPES, bundle.values()):
                alphabets[name].add(value)
    return FeatureAlphabets(alphabets)


def encode(bundle: FeatureBundle, alphabets: FeatureAlphabets) -> np.ndarray:
    """Per-feature index vector in FEATURE_TYPES order; unseen values map to 0."""
    return np.array(
        [alphabets[name].index(v) for name, v in zip(FEATURE_TYPES, bundle.values())],
        dtype=np.intp,
    )
