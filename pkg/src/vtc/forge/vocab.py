"""Vocabulary, POS replacement pools and a fallback tagger."""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Sequence

import numpy as np

from ..exceptions import ContractError, VocabIndexError
from .io import AnnotatedSentence

PAD, UNK = "<pad>", "<unk>"
PAD_INDEX, UNK_INDEX = 0, 1


class Vocabulary:
    """Word <-> index bijection with unigram counts.

    Indices 0 and 1 are reserved for padding and unknown words; real words
    start at 2 and carry a strictly positive count.
    """

    def __init__(self, counts: dict[str, int]):
        self.words: list[str] = [PAD, UNK] + sorted(counts)
        self.index: dict[str, int] = {w: i for i, w in enumerate(self.words)}
        self.counts: dict[str, int] = dict(counts)

    @classmethod
    def from_token_lists(cls, sentences: Iterable[Sequence[str]]) -> "Vocabulary":
        counts = Counter(tok for s in sentences for tok in s)
        if not counts:
            raise ContractError("cannot build a vocabulary from an empty corpus")
        return cls(dict(counts))

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word) -> bool:
        return word in self.index

    @property
    def real_indices(self) -> np.ndarray:
        return np.arange(2, len(self.words))

    def count(self, word: str) -> int:
        return self.counts.get(word, 0)

    def count_vector(self) -> np.ndarray:
        """Counts aligned with indices; reserved slots hold 0."""
        return np.array([self.counts.get(w, 0) for w in self.words], dtype=np.float64)

    def encode(self, tokens: Sequence[str], allow_unk: bool = False) -> list[int]:
        out = []
        for t in tokens:
            i = self.index.get(t)
            if i is None:
                if not allow_unk:
                    raise VocabIndexError(f"word {t!r} is not in the vocabulary")
                i = UNK_INDEX
            out.append(i)
        return out

    def decode(self, indices: Iterable[int]) -> list[str]:
        return [self.words[int(i)] for i in indices]

    def to_json(self) -> dict:
        return {"words": self.words[2:], "counts": [self.counts[w] for w in self.words[2:]]}

    @classmethod
    def from_json(cls, obj: dict) -> "Vocabulary":
        return cls(dict(zip(obj["words"], obj["counts"])))


class PosSets:
    """For every tag r, the set S_r of words seen with r at least once."""

    def __init__(self, members: dict[str, dict[str, int]]):
        # members[tag][word] = occurrences of word carrying that tag
        self.members = {t: dict(ws) for t, ws in members.items()}

    @property
    def tags(self) -> list[str]:
        return sorted(self.members)

    def words(self, tag: str) -> list[str]:
        return sorted(self.members.get(tag, {}))

    def tag_counts(self, tag: str) -> dict[str, int]:
        return dict(self.members.get(tag, {}))

    def S(self, tag: str, vocab: Vocabulary) -> set[int]:
        return {vocab.index[w] for w in self.members.get(tag, {})}


def build_vocab_and_pos(sentences: Sequence[AnnotatedSentence]) -> tuple[Vocabulary, PosSets]:
    """Unigram counts over all tokens and per-tag membership sets."""
    if not sentences:
        raise ContractError("cannot build a vocabulary from an empty corpus")
    vocab = Vocabulary.from_token_lists(s.tokens for s in sentences)
    members: dict[str, Counter] = {}
    for s in sentences:
        for tok, tag in zip(s.tokens, s.tags):
            members.setdefault(tag, Counter())[tok] += 1
    return vocab, PosSets({t: dict(c) for t, c in members.items()})


_SUFFIX_RULES = (
    ("ing", "VBG"),
    ("ed", "VBD"),
    ("ly", "RB"),
    ("ous", "JJ"),
    ("ful", "JJ"),
    ("ive", "JJ"),
    ("ion", "NN"),
    ("ness", "NN"),
    ("ment", "NN"),
    ("s", "NNS"),
)
_CLOSED_CLASS = {
    "the": "DT", "a": "DT", "an": "DT", "this": "DT", "that": "DT",
    "he": "PRP", "she": "PRP", "it": "PRP", "they": "PRP", "someone": "NN",
    "in": "IN", "on": "IN", "at": "IN", "with": "IN", "of": "IN", "to": "TO", "from": "IN",
    "and": "CC", "or": "CC", "but": "CC", "is": "VBZ", "are": "VBP", "was": "VBD",
    "his": "PRP$", "her": "PRP$", "their": "PRP$", "not": "RB",
}


def fallback_tag(tokens: Sequence[str]) -> list[str]:
    """Suffix-rule tagger for untagged text; a coarse stand-in, not a real POS model."""
    tags = []
    for tok in tokens:
        low = tok.lower()
        if low in _CLOSED_CLASS:
            tags.append(_CLOSED_CLASS[low])
        elif tok[:1].isupper():
            tags.append("NNP")
        elif low.isdigit():
            tags.append("CD")
        else:
            tags.append(next((tag for suf, tag in _SUFFIX_RULES if low.endswith(suf) and len(low) > len(suf) + 2), "NN"))
    return tags
