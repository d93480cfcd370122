"""Replacement-word sampling and sentence corruption."""

from __future__ import annotations

import logging
from collections import Counter
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ..exceptions import ConfigError, ContractError
from .io import AnnotatedSentence, Corruption, VtcSample
from .vocab import PosSets, Vocabulary, build_vocab_and_pos

logger = logging.getLogger(__name__)

STRATEGIES = ("random", "pos-natural")


class EmptyPoolError(ContractError):
    """No admissible replacement exists for a word; the sample is skipped."""


def sample_random_placement(rng: np.random.Generator, vocab: Vocabulary, original: str | None = None) -> str:
    """Uniform draw over the real words, re-drawn while it equals ``original``."""
    words = vocab.words[2:]
    if len(words) < 2:
        raise ContractError("random placement needs at least two words")
    while True:
        w = words[int(rng.integers(len(words)))]
        if w != original:
            return w


def pos_natural_distribution(pos_sets: PosSets, vocab: Vocabulary, tag: str, original: str | None) -> tuple[list[str], np.ndarray]:
    """Candidates S_r minus ``original`` with probabilities proportional to corpus counts."""
    words = [w for w in pos_sets.words(tag) if w != original]
    if not words:
        raise EmptyPoolError(f"no replacement with tag {tag!r} other than {original!r}")
    counts = np.array([vocab.count(w) for w in words], dtype=np.float64)
    return words, counts / counts.sum()


def sample_pos_natural(
    rng: np.random.Generator,
    pos_sets: PosSets,
    vocab: Vocabulary,
    tag: str,
    original: str | None,
    size: int | None = None,
):
    """Draw from S_r (excluding ``original``) proportionally to unigram counts."""
    words, p = pos_natural_distribution(pos_sets, vocab, tag, original)
    idx = rng.choice(len(words), size=size, p=p)
    if size is None:
        return words[int(idx)]
    return [words[i] for i in idx]


def _replace(rng, strategy, sentence, pos, vocab, pos_sets) -> str:
    original = sentence.tokens[pos]
    if strategy == "random":
        return sample_random_placement(rng, vocab, original)
    return sample_pos_natural(rng, pos_sets, vocab, sentence.tags[pos], original)


def corrupt(
    sentence: AnnotatedSentence,
    strategy: str,
    k,
    rng: np.random.Generator,
    vocab: Vocabulary,
    pos_sets: PosSets,
) -> list[VtcSample]:
    """Corrupt the blanks of one sentence.

    With ``k == 1`` every blank yields its own single-corruption sample.
    With ``k > 1`` one sample is produced with ``k`` randomly chosen blanks
    replaced; ``k == "all"`` replaces every blank.
    """
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown corruption strategy {strategy!r}; expected one of {STRATEGIES}")
    blanks = list(sentence.blanks)
    if k == "all":
        k = len(blanks)
        groups = [blanks] if blanks else []
    else:
        k = int(k)
        if k < 1:
            raise ConfigError(f"k must be >= 1, got {k}")
        if len(blanks) < k:
            raise ContractError(f"sentence {sentence.id!r} has {len(blanks)} blanks, fewer than k={k}")
        if k == 1:
            groups = [[b] for b in blanks]
        else:
            groups = [sorted(int(b) for b in rng.choice(blanks, size=k, replace=False))]
    out = []
    for g, positions in enumerate(groups):
        tokens = list(sentence.tokens)
        corrs = []
        for pos in positions:
            rep = _replace(rng, strategy, sentence, pos, vocab, pos_sets)
            tokens[pos] = rep
            corrs.append(Corruption(pos, sentence.tokens[pos], rep))
        sid = sentence.id if len(groups) == 1 else f"{sentence.id}#{g}"
        out.append(VtcSample(tokens, list(sentence.tags), corrs, sentence.video_id, sid))
    return out


class Corruptor(TransformerMixin, BaseEstimator):
    """Turns clean annotated sentences into VTC samples.

    ``fit`` learns the vocabulary and POS pools from training sentences;
    ``transform`` corrupts any sentences with them. Sentences whose blank has
    no admissible replacement are skipped and logged.
    """

    def __init__(self, strategy: str = "pos-natural", k=1, random_state: int | None = None):
        self.strategy = strategy
        self.k = k
        self.random_state = random_state

    def fit(self, X: Sequence[AnnotatedSentence], y=None):
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown corruption strategy {self.strategy!r}; expected one of {STRATEGIES}")
        self.vocab_, self.pos_sets_ = build_vocab_and_pos(list(X))
        self.rng_ = np.random.default_rng(self.random_state)
        return self

    def transform(self, X: Sequence[AnnotatedSentence]) -> list[VtcSample]:
        check_is_fitted(self, "vocab_")
        out = []
        for s in X:
            try:
                out.extend(corrupt(s, self.strategy, self.k, self.rng_, self.vocab_, self.pos_sets_))
            except EmptyPoolError as exc:
                logger.info("skipping sentence %s: %s", s.id, exc)
            except ContractError as exc:
                if self.k in (1, "all"):
                    raise
                logger.info("skipping sentence %s: %s", s.id, exc)
        return out


def appearance_ratios(samples: Sequence[VtcSample]) -> dict[str, float]:
    """Per word: (times used as a replacement) / (times seen uncorrupted).

    Words never seen uncorrupted are left out.
    """
    wrong, right = Counter(), Counter()
    for s in samples:
        bad = set(s.positions)
        for i, tok in enumerate(s.tokens):
            (wrong if i in bad else right)[tok] += 1
    return {w: wrong[w] / right[w] for w in right}


def appearance_ratio_variance(samples: Sequence[VtcSample], words: Iterable[str] | None = None, relative: bool = True) -> float:
    """Spread of the appearance ratios across words.

    With ``relative`` the ratios are divided by their mean first, so the
    statistic compares strategies that use a word as a replacement at very
    different overall rates. Pass ``words`` (e.g. every word seen in a blank
    slot) to score two strategies on the same words; filler words that one
    strategy never uses would otherwise dominate.
    """
    ratios = appearance_ratios(samples)
    if words is not None:
        ratios = {w: ratios.get(w, 0.0) for w in words}
    if not ratios:
        raise ContractError("no words to compute appearance ratios over")
    r = np.array(list(ratios.values()))
    if relative:
        if r.mean() == 0:
            return 0.0
        r = r / r.mean()
    return float(r.var())
