"""Detection/correction accuracy, MAP and the word- and sentence-based
variants used for sentences with several inaccuracies."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import ContractError


def _aligned(a, b) -> None:
    if len(a) != len(b):
        raise ContractError(f"predictions ({len(a)}) and truths ({len(b)}) are not aligned")


def detection_accuracy(predictions: Sequence[int], truths: Sequence[int]) -> float:
    """Fraction of samples whose predicted position equals the true one."""
    _aligned(predictions, truths)
    if not truths:
        return 0.0
    return sum(int(p) == int(t) for p, t in zip(predictions, truths)) / len(truths)


def correction_accuracy(predictions: Sequence[tuple], truths: Sequence[tuple]) -> float:
    """Fraction of samples where both the position and the word match."""
    _aligned(predictions, truths)
    if not truths:
        return 0.0
    return sum(int(p[0]) == int(t[0]) and p[1] == t[1] for p, t in zip(predictions, truths)) / len(truths)


def rank_pairs(scores: np.ndarray) -> np.ndarray:
    """Flat pair indices by descending score; ties keep row-major order."""
    return np.argsort(-np.asarray(scores, dtype=np.float64).ravel(), kind="stable")


def average_precision(scores: np.ndarray, relevant: Sequence[tuple[int, int]]) -> float:
    """AP of the relevant (row, column) pairs in the ranking of all pairs.

    AP = mean over relevant pairs of (#relevant at rank <= r_i) / r_i, so a
    single relevant pair scores 1 / rank.
    """
    scores = np.asarray(scores)
    if not relevant:
        raise ContractError("average_precision needs at least one relevant pair")
    n_cols = scores.shape[1]
    flat = {int(r) * n_cols + int(c) for r, c in relevant}
    order = rank_pairs(scores)
    ranks = np.sort(np.flatnonzero(np.isin(order, list(flat))) + 1)
    return float(np.mean(np.arange(1, len(ranks) + 1) / ranks))


@dataclass
class SamplePrediction:
    """Model output for one sample.

    ``positions`` are the top-k detections; ``words[i]`` is the replacement
    predicted for ``positions[i]``; ``scores`` is the (N, |beta|) pair-score
    matrix whose columns follow ``beta_words``.
    """

    positions: list[int]
    words: list[str]
    scores: np.ndarray | None = None


@dataclass
class SampleTruth:
    positions: list[int]
    words: list[str]

    @property
    def k(self) -> int:
        return len(self.positions)


@dataclass
class KRow:
    samples: int = 0
    words: int = 0
    wb_detection: float = 0.0
    sb_detection: float = 0.0
    wb_correction: float = 0.0
    sb_correction: float = 0.0
    wb_map: float | None = None
    sb_map: float | None = None


@dataclass
class EvalReport:
    detection_accuracy: float
    correction_accuracy: float
    map: float | None
    total: int
    per_k: dict[str, KRow] = field(default_factory=dict)

    def to_json(self) -> dict:
        obj = asdict(self)
        obj["per_k"] = {k: asdict(v) for k, v in self.per_k.items()}
        return obj

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, obj: dict) -> "EvalReport":
        per_k = {k: KRow(**v) for k, v in obj.get("per_k", {}).items()}
        return cls(obj["detection_accuracy"], obj["correction_accuracy"], obj["map"], obj["total"], per_k)

    @classmethod
    def loads(cls, text: str) -> "EvalReport":
        return cls.from_json(json.loads(text))

    def format_table(self) -> str:
        def pct(x):
            return "   -" if x is None else f"{100 * x:5.1f}"

        lines = [
            f"samples: {self.total}",
            f"detection accuracy (%):  {pct(self.detection_accuracy)}",
            f"correction accuracy (%): {pct(self.correction_accuracy)}",
            f"correction MAP (%):      {pct(self.map)}",
            "",
            f"{'k':>4} {'#samp':>6} {'WB-det':>7} {'SB-det':>7} {'WB-cor':>7} {'SB-cor':>7} {'WB-MAP':>7} {'SB-MAP':>7}",
        ]
        for key, row in self.per_k.items():
            lines.append(
                f"{key:>4} {row.samples:>6} {pct(row.wb_detection):>7} {pct(row.sb_detection):>7} "
                f"{pct(row.wb_correction):>7} {pct(row.sb_correction):>7} {pct(row.wb_map):>7} {pct(row.sb_map):>7}"
            )
        return "\n".join(lines)


def _row(preds: Sequence[SamplePrediction], truths: Sequence[SampleTruth], beta_index: dict[str, int] | None) -> KRow:
    row = KRow(samples=len(truths))
    wb_det = wb_cor = 0
    sb_det = sb_cor = 0
    wb_aps, sb_aps = [], []
    for p, t in zip(preds, truths):
        guessed = dict(zip(p.positions, p.words))
        det_hits = [pos in guessed for pos in t.positions]
        cor_hits = [pos in guessed and guessed[pos] == w for pos, w in zip(t.positions, t.words)]
        row.words += t.k
        wb_det += sum(det_hits)
        wb_cor += sum(cor_hits)
        sb_det += all(det_hits)
        sb_cor += all(cor_hits)
        if p.scores is not None and beta_index is not None:
            pairs = [(pos, beta_index[w]) for pos, w in zip(t.positions, t.words) if w in beta_index]
            # a true word outside beta can never be ranked, so it contributes AP 0
            wb_aps += [average_precision(p.scores, [pair]) for pair in pairs]
            wb_aps += [0.0] * (t.k - len(pairs))
            sb_aps.append(average_precision(p.scores, pairs) * len(pairs) / t.k if pairs else 0.0)
    if row.samples:
        row.wb_detection = wb_det / row.words
        row.wb_correction = wb_cor / row.words
        row.sb_detection = sb_det / row.samples
        row.sb_correction = sb_cor / row.samples
    if wb_aps:
        row.wb_map = float(np.mean(wb_aps))
        row.sb_map = float(np.mean(sb_aps))
    return row


def multi_k_report(
    predictions: Sequence[SamplePrediction],
    truths: Sequence[SampleTruth],
    beta_words: Sequence[str] | None = None,
) -> EvalReport:
    """Full report with one row per observed k plus an "all" row."""
    _aligned(predictions, truths)
    for p, t in zip(predictions, truths):
        if len(p.positions) != t.k or len(p.words) != t.k:
            raise ContractError(f"prediction carries {len(p.positions)} positions for a sample with k={t.k}")
    beta_index = {w: i for i, w in enumerate(beta_words)} if beta_words is not None else None
    per_k: dict[str, KRow] = {}
    for k in sorted({t.k for t in truths}):
        idx = [i for i, t in enumerate(truths) if t.k == k]
        per_k[str(k)] = _row([predictions[i] for i in idx], [truths[i] for i in idx], beta_index)
    overall = _row(predictions, truths, beta_index)
    per_k["all"] = overall
    return EvalReport(overall.wb_detection, overall.wb_correction, overall.wb_map, len(truths), per_k)


def expected_random_detection(lengths: Sequence[int]) -> float:
    return float(np.mean(1.0 / np.asarray(lengths, dtype=np.float64)))


def expected_random_pair(lengths: Sequence[int], n_candidates: int) -> float:
    return float(np.mean(1.0 / (np.asarray(lengths, dtype=np.float64) * n_candidates)))


def simulate_random_detection(lengths: Sequence[int], truths: Sequence[int], rng: np.random.Generator, repeats: int = 1) -> float:
    """Accuracy of uniform position guessing, pooled over ``repeats`` passes."""
    lengths = np.asarray(lengths)
    truths = np.asarray(truths)
    hits = 0
    for _ in range(repeats):
        guesses = (rng.random(len(lengths)) * lengths).astype(np.int64)
        hits += int((guesses == truths).sum())
    return hits / (repeats * len(lengths))


def simulate_random_pairs(
    lengths: Sequence[int], truths: Sequence[tuple[int, int]], n_candidates: int, rng: np.random.Generator, repeats: int = 1
) -> float:
    lengths = np.asarray(lengths)
    tpos = np.asarray([t[0] for t in truths])
    tword = np.asarray([t[1] for t in truths])
    hits = 0
    for _ in range(repeats):
        gp = (rng.random(len(lengths)) * lengths).astype(np.int64)
        gw = rng.integers(n_candidates, size=len(lengths))
        hits += int(((gp == tpos) & (gw == tword)).sum())
    return hits / (repeats * len(lengths))
