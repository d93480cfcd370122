"""Input checks shared by the estimator and the CLI."""

from __future__ import annotations

from typing import Sequence

from .exceptions import CompatibilityError, ConfigError, ContractError, LengthError
from .forge.io import FeatureStore, VtcSample


def check_samples(X, max_len: int | None = None, single: bool = False) -> list[VtcSample]:
    """Return ``X`` as a list of samples, enforcing length and (optionally) k == 1."""
    if isinstance(X, VtcSample):
        X = [X]
    X = list(X)
    if not X:
        raise ContractError("expected at least one sample")
    for s in X:
        if not isinstance(s, VtcSample):
            raise ContractError(f"expected VtcSample, got {type(s).__name__}")
        if not s.tokens:
            raise LengthError(f"sample {s.id!r} is empty")
        if max_len is not None and len(s.tokens) > max_len:
            raise LengthError(f"sample {s.id!r} has {len(s.tokens)} tokens, more than max_len={max_len}")
        if single and s.k != 1:
            raise ContractError(f"training sample {s.id!r} has k={s.k}; training uses one inaccuracy per sentence")
    return X


def check_features(features: FeatureStore | None, samples: Sequence[VtcSample], d_v: int | None = None) -> FeatureStore:
    if features is None:
        raise CompatibilityError("this model uses video features but none were given")
    if d_v is not None and features.d_v != d_v:
        raise CompatibilityError(f"feature store has d_v={features.d_v}, model expects {d_v}")
    missing = [s.video_id for s in samples if s.video_id not in features]
    if missing:
        raise CompatibilityError(f"{len(missing)} samples have no video feature, e.g. {missing[0]!r}")
    return features


def check_k(k, samples: Sequence[VtcSample]) -> list[int]:
    """Resolve ``k`` ("auto" means each sample's own k) into one value per sample."""
    if k == "auto" or k is None:
        return [s.k for s in samples]
    try:
        k = int(k)
    except (TypeError, ValueError):
        raise ConfigError(f"k must be a positive integer or 'auto', got {k!r}") from None
    if k < 1:
        raise ConfigError(f"k must be positive, got {k}")
    for s in samples:
        if k > len(s.tokens):
            raise ContractError(f"k={k} exceeds the length of sample {s.id!r}")
    return [k] * len(samples)
