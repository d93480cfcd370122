"""scikit-learn style front end: fit on corrupted samples, predict corrections."""

from __future__ import annotations

import logging
import time
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import checkpoint
from . import tensor as T
from .detector import detect_k
from .exceptions import CompatibilityError, ConfigError, CorpusError
from .forge.io import FeatureStore, VtcSample
from .forge.vocab import PAD_INDEX, UNK_INDEX, Vocabulary
from .metrics import EvalReport, SamplePrediction, SampleTruth, multi_k_report
from .model import Batch, ModelConfig, VTCNetwork, pad_batch
from .optim import make_optimizer
from .validation import check_features, check_k, check_samples

logger = logging.getLogger(__name__)

FORMAT_TAG = "vtc-estimator/1"


class VisualTextCorrector(BaseEstimator):
    """Detects the inaccurate word of a video description and proposes a replacement.

    Parameters mirror the run configuration: model sizes (``d_x``, ``hidden``,
    ``d_q``, ``kernel_size``, ``depth``, ``max_len``), the encoder ``paths``
    (``"conv+lstm"``, ``"conv"``, ``"lstm"``), the ``visual`` mode
    (``"none"``, ``"gated"``, ``"concat"``) and the training schedule.
    ``clip="auto"`` clips gradients at global norm 5 whenever an LSTM is used.
    """

    def __init__(
        self,
        d_x: int = 64,
        hidden: int = 64,
        d_q: int = 128,
        kernel_size: int = 5,
        depth: int = 3,
        max_len: int = 40,
        paths: str = "conv+lstm",
        use_position: bool = True,
        visual: str = "gated",
        epochs: int = 50,
        batch_size: int = 32,
        lr: float = 1e-3,
        optimizer: str = "adam",
        clip="auto",
        patience: int = 10,
        random_state: int = 0,
        verbose: bool = False,
    ):
        self.d_x = d_x
        self.hidden = hidden
        self.d_q = d_q
        self.kernel_size = kernel_size
        self.depth = depth
        self.max_len = max_len
        self.paths = paths
        self.use_position = use_position
        self.visual = visual
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.optimizer = optimizer
        self.clip = clip
        self.patience = patience
        self.random_state = random_state
        self.verbose = verbose

    # ------------------------------------------------------------------ setup

    def _clip_value(self) -> float | None:
        if self.clip == "auto":
            return 5.0 if "lstm" in self.paths else None
        return None if self.clip in (None, 0) else float(self.clip)

    def _build_vocab(self, X: Sequence[VtcSample]) -> Vocabulary:
        seqs = [s.source_tokens() for s in X] + [[c.replacement for c in s.corruptions] for s in X]
        return Vocabulary.from_token_lists(seqs)

    def _uses_video(self) -> bool:
        return self.visual != "none"

    def _init_network(self, vocab: Vocabulary, beta: list[int], d_v: int) -> None:
        config = ModelConfig(
            vocab_size=len(vocab),
            beta=beta,
            d_x=self.d_x,
            hidden=self.hidden,
            d_q=self.d_q,
            kernel_size=self.kernel_size,
            depth=self.depth,
            max_len=self.max_len,
            d_v=d_v,
            visual=self.visual,
            paths=self.paths,
            use_position=self.use_position,
        )
        self.vocab_ = vocab
        self.beta_ = beta
        self.beta_words_ = vocab.decode(beta)
        self.d_v_ = d_v
        self.network_ = VTCNetwork(config, seed=self.random_state)

    def _batch(self, samples: Sequence[VtcSample], features: FeatureStore | None, with_targets: bool) -> Batch:
        seqs = [self.vocab_.encode(s.tokens, allow_unk=True) for s in samples]
        tokens, mask = pad_batch(seqs, PAD_INDEX)
        omega = np.stack([features[s.video_id] for s in samples]) if self._uses_video() else None
        if not with_targets:
            return Batch(tokens, mask, omega)
        positions = np.array([s.corruptions[0].pos for s in samples])
        answers = np.array([self.vocab_.index.get(s.corruptions[0].original, UNK_INDEX) for s in samples])
        return Batch(tokens, mask, omega, positions, answers)

    # ------------------------------------------------------------------ training

    def fit(self, X: Sequence[VtcSample], y=None, features: FeatureStore | None = None, validation: Sequence[VtcSample] | None = None):
        """Train end to end on single-inaccuracy samples.

        ``features`` maps each sample's ``video_id`` to its feature vector and
        is required unless ``visual == "none"``. With ``validation`` samples,
        the best epoch by validation detection accuracy is kept and training
        stops after ``patience`` epochs without improvement.
        """
        X = check_samples(X, self.max_len, single=True)
        if self.batch_size < 1 or self.epochs < 0:
            raise ConfigError("batch_size must be positive and epochs non-negative")
        d_v = 0
        if self._uses_video():
            check_features(features, X)
            d_v = features.d_v
        vocab = self._build_vocab(X)
        beta = sorted({vocab.index[c.original] for s in X for c in s.corruptions})
        if len(beta) < 2:
            raise CorpusError("training corpus has fewer than two distinct answer words")
        self._init_network(vocab, beta, d_v)
        if validation is not None:
            validation = check_samples(validation, self.max_len)
            if self._uses_video():
                check_features(features, validation, d_v)

        rng = np.random.default_rng(self.random_state)
        params = self.network_.parameters()
        opt = make_optimizer(self.optimizer, params, self.lr, self._clip_value())
        self.history_ = []
        best_acc, best_state, stale = -1.0, None, 0
        n = len(X)
        for epoch in range(self.epochs):
            t0 = time.perf_counter()
            order = rng.permutation(n)
            sums = np.zeros(3)
            for start in range(0, n, self.batch_size):
                chunk = [X[i] for i in order[start : start + self.batch_size]]
                out = self.network_.forward(self._batch(chunk, features, True))
                out.loss.backward()
                opt.step()
                sums += len(chunk) * np.array([out.loss.item(), out.l_d.item(), out.l_f.item()])
            record = {"epoch": epoch + 1, "loss": sums[0] / n, "l_d": sums[1] / n, "l_f": sums[2] / n}
            if validation is not None:
                rep = self.evaluate(validation, features, k=1)
                record.update(val_detection=rep.detection_accuracy, val_correction=rep.correction_accuracy)
                if rep.detection_accuracy > best_acc:
                    best_acc, best_state, stale = rep.detection_accuracy, self.network_.state_dict(), 0
                else:
                    stale += 1
            record["seconds"] = time.perf_counter() - t0
            self.history_.append(record)
            if self.verbose:
                logger.info("epoch %(epoch)d loss %(loss).4f l_d %(l_d).4f l_f %(l_f).4f", record)
            if validation is not None and stale >= self.patience:
                break
        if best_state is not None:
            self.network_.load_state_dict(best_state)
        self.n_epochs_ = len(self.history_)
        return self

    # ------------------------------------------------------------------ inference

    def _forward_chunks(self, X: Sequence[VtcSample], features: FeatureStore | None, chunk: int = 256):
        for start in range(0, len(X), chunk):
            part = X[start : start + chunk]
            with T.no_grad():
                out = self.network_.forward(self._batch(part, features, False))
            yield part, out

    def _prepare(self, X, features):
        check_is_fitted(self, "network_")
        X = check_samples(X, self.max_len)
        if self._uses_video():
            check_features(features, X, self.d_v_)
        return X

    def decision_function(self, X, features: FeatureStore | None = None) -> list[np.ndarray]:
        """Detection scores D for every real position of every sample."""
        X = self._prepare(X, features)
        out = []
        for part, res in self._forward_chunks(X, features):
            out += [res.D.data[i, : len(s.tokens)].copy() for i, s in enumerate(part)]
        return out

    def predict_samples(self, X, features: FeatureStore | None = None, k="auto", with_scores: bool = True) -> list[SamplePrediction]:
        """Top-k positions, one word per detected position, and the pair-score matrix.

        Each detected position gets the argmax of its own hard-attention
        logits W_i (q_t + u_V).
        """
        X = self._prepare(X, features)
        ks = check_k(k, X)
        preds = []
        offset = 0
        for part, res in self._forward_chunks(X, features):
            pair = self.network_.pair_scores(res)
            for i, s in enumerate(part):
                n = len(s.tokens)
                D = res.D.data[i, :n]
                positions = detect_k(D, ks[offset + i])
                scores = pair[i, :n]
                words = [self.beta_words_[int(np.argmax(scores[t]))] for t in positions]
                preds.append(SamplePrediction(positions, words, scores if with_scores else None))
            offset += len(part)
        return preds

    def predict(self, X, features: FeatureStore | None = None, k=1) -> list[list[tuple[int, str, float]]]:
        """(position, replacement word, joint log-score) triples, k per sample."""
        out = []
        for p in self.predict_samples(X, features, k):
            out.append([(t, w, float(p.scores[t, self.beta_words_.index(w)])) for t, w in zip(p.positions, p.words)])
        return out

    def evaluate(self, X, features: FeatureStore | None = None, k="auto") -> EvalReport:
        X = check_samples(X, self.max_len)
        preds = self.predict_samples(X, features, k)
        truths = [SampleTruth(s.positions, [c.original for c in s.corruptions]) for s in X]
        if k != "auto":
            # report rows are keyed by each sample's true k; only k == 1 truth is comparable to a fixed k
            truths = [SampleTruth(t.positions[: len(p.positions)], t.words[: len(p.positions)]) for p, t in zip(preds, truths)]
        return multi_k_report(preds, truths, self.beta_words_)

    def score(self, X, y=None, features: FeatureStore | None = None) -> float:
        """Correction accuracy (position and word both right) on single-inaccuracy samples."""
        return self.evaluate(X, features, k=1).correction_accuracy

    # ------------------------------------------------------------------ persistence

    def save(self, path) -> None:
        check_is_fitted(self, "network_")
        records = dict(self.network_.state_dict())
        records["beta"] = np.asarray(self.beta_, dtype=np.float32)
        meta = {
            "format": FORMAT_TAG,
            "params": self.get_params(),
            "vocab": self.vocab_.to_json(),
            "d_v": self.d_v_,
        }
        checkpoint.save(path, records, meta)

    @classmethod
    def load(cls, path) -> "VisualTextCorrector":
        records, meta = checkpoint.load(path)
        if meta.get("format") != FORMAT_TAG:
            raise CompatibilityError(f"{path} is not a VisualTextCorrector checkpoint")
        est = cls(**meta["params"])
        vocab = Vocabulary.from_json(meta["vocab"])
        beta = [int(b) for b in records.pop("beta")]
        est._init_network(vocab, beta, int(meta["d_v"]))
        est.network_.load_state_dict(records)
        return est
