"""From clean sentences to train/val/test VTC samples."""

from __future__ import annotations

from typing import Sequence

from .corrupt import Corruptor
from .io import AnnotatedSentence, VtcSample, split_of

SPLITS = ("train", "val", "test")


def split_sentences(sentences: Sequence[AnnotatedSentence]) -> dict[str, list[AnnotatedSentence]]:
    out: dict[str, list[AnnotatedSentence]] = {name: [] for name in SPLITS}
    for s in sentences:
        out[split_of(s.id)].append(s)
    return out


def make_splits(sentences: Sequence[AnnotatedSentence], strategy: str, k, seed: int) -> dict[str, list[VtcSample]]:
    """Corrupt each split with vocabulary and POS pools learned on the training split.

    Training and validation samples always carry one inaccuracy; ``k`` only
    shapes the test split.
    """
    parts = split_sentences(sentences)
    single = Corruptor(strategy, 1, random_state=seed).fit(parts["train"])
    multi = Corruptor(strategy, k, random_state=seed + 1).fit(parts["train"])
    return {
        "train": single.transform(parts["train"]),
        "val": single.transform(parts["val"]),
        "test": multi.transform(parts["test"]),
    }
