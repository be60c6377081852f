"""
Words over the irreducible labels of G and finite ℕ-linear combinations of words.

A word indexes an irreducible r_x of the free wreath product; the empty word is the
trivial representation.
"""
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Union

from src.core.errors import ArityError, ParseError
from src.fusion.fusionring import FusionRing


@dataclass(frozen=True)
class Word:
    letters: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(self.letters))

    def __len__(self):
        return len(self.letters)

    def __iter__(self) -> Iterator[str]:
        return iter(self.letters)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Word(self.letters[item])
        return self.letters[item]

    def __add__(self, other: "Word") -> "Word":
        """Concatenation."""
        return Word(self.letters + other.letters)

    def __bool__(self):
        return bool(self.letters)

    @property
    def sort_key(self):
        return (len(self.letters), self.letters)

    def to_text(self) -> str:
        return ",".join(self.letters)

    def __str__(self):
        return self.to_text()

    def validate(self, ring: FusionRing) -> "Word":
        for a in self.letters:
            ring.check_label(a)
        return self


def parse_word(text: str) -> Word:
    """Comma-joined labels; the empty string is the empty word."""
    text = text.strip()
    if not text:
        return Word()
    letters = tuple(part.strip() for part in text.split(","))
    if any(not a for a in letters):
        raise ParseError(f"empty letter in word {text!r}")
    return Word(letters)


class FormalSum:
    """Map word -> positive multiplicity, iterated by (length, letters)."""

    def __init__(self, terms: Union[Mapping[Word, int], Iterable[tuple[Word, int]], None] = None):
        counts: Counter = Counter()
        items = terms.items() if isinstance(terms, Mapping) else (terms or ())
        for word, mult in items:
            if mult < 0:
                raise ValueError("multiplicities are natural numbers")
            counts[word if isinstance(word, Word) else Word(word)] += mult
        self._terms = {w: counts[w] for w in sorted(counts, key=lambda w: w.sort_key) if counts[w]}

    @classmethod
    def of(cls, *words: Word) -> "FormalSum":
        return cls((w, 1) for w in words)

    def __iter__(self):
        return iter(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def __getitem__(self, word: Word) -> int:
        return self._terms.get(word, 0)

    def __contains__(self, word) -> bool:
        return word in self._terms

    def __eq__(self, other) -> bool:
        return isinstance(other, FormalSum) and self._terms == other._terms

    def __hash__(self):
        return hash(tuple(self._terms.items()))

    def __add__(self, other: "FormalSum") -> "FormalSum":
        return FormalSum(list(self.items()) + list(other.items()))

    def scaled(self, factor: int) -> "FormalSum":
        return FormalSum((w, n * factor) for w, n in self.items())

    def map_words(self, fn) -> "FormalSum":
        return FormalSum((fn(w), n) for w, n in self.items())

    def total(self) -> int:
        return sum(self._terms.values())

    def to_json(self) -> dict[str, int]:
        return {w.to_text(): n for w, n in self.items()}

    def __repr__(self):
        return f"FormalSum({self.to_json()})"


def word_involution(ring: FusionRing, x: Word) -> Word:
    """(a_1,...,a_k) -> (conj a_k, ..., conj a_1)."""
    return Word(tuple(ring.conj(a) for a in reversed(x.letters)))


def word_fusion(ring: FusionRing, x: Word, y: Word) -> FormalSum:
    """(a_1..a_k).(b_1..b_l): words (a_1..a_{k-1}, c, b_2..b_l) with multiplicity N_{a_k b_1}^c."""
    if not x or not y:
        raise ArityError("fusion needs two non-empty words")
    head, tail = x.letters[:-1], y.letters[1:]
    return FormalSum(
        (Word(head + (c,) + tail), n) for c, n in ring.fuse(x.letters[-1], y.letters[0]).items()
    )


def formal_sum_to_json(s: FormalSum) -> dict[str, int]:
    return s.to_json()


def formal_sum_from_json(doc: Mapping[str, int]) -> FormalSum:
    try:
        return FormalSum((parse_word(text), int(n)) for text, n in doc.items())
    except (TypeError, ValueError) as e:
        raise ParseError(f"malformed formal sum {doc!r}: {e}") from e
