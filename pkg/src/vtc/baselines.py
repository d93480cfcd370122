"""Reference predictors that need no model: a ground-truth oracle and uniform guessing.

Both emit the same ``SamplePrediction`` records as the trained estimator, so
they exercise the evaluation harness end to end.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .forge.io import VtcSample
from .metrics import SamplePrediction


def oracle_predictions(samples: Sequence[VtcSample], beta_words: Sequence[str]) -> list[SamplePrediction]:
    """Predict the true positions and words; true pairs score 1, everything else 0."""
    col = {w: i for i, w in enumerate(beta_words)}
    out = []
    for s in samples:
        scores = np.zeros((len(s.tokens), len(beta_words)))
        for c in s.corruptions:
            if c.original in col:
                scores[c.pos, col[c.original]] = 1.0
        out.append(SamplePrediction(list(s.positions), [c.original for c in s.corruptions], scores))
    return out


def random_predictions(
    samples: Sequence[VtcSample], beta_words: Sequence[str], rng: np.random.Generator, k="auto"
) -> list[SamplePrediction]:
    """Uniformly random positions and words, with i.i.d. uniform pair scores."""
    out = []
    for s in samples:
        n = len(s.tokens)
        kk = s.k if k == "auto" else int(k)
        positions = [int(p) for p in rng.choice(n, size=kk, replace=False)]
        words = [beta_words[int(i)] for i in rng.integers(len(beta_words), size=kk)]
        out.append(SamplePrediction(positions, words, rng.random((n, len(beta_words)))))
    return out
