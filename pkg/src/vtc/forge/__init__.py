"""Corpus construction: vocabulary, POS pools, corruption and synthesis."""

from .corrupt import (
    STRATEGIES,
    Corruptor,
    EmptyPoolError,
    appearance_ratio_variance,
    appearance_ratios,
    corrupt,
    pos_natural_distribution,
    sample_pos_natural,
    sample_random_placement,
)
from .io import AnnotatedSentence, Corruption, FeatureStore, VtcSample, read_corpus, read_sentences, split_of, write_jsonl
from .pipeline import SPLITS, make_splits, split_sentences
from .synthetic import SyntheticConfig, bayes_accuracy, generate_synthetic
from .vocab import PAD_INDEX, UNK_INDEX, PosSets, Vocabulary, build_vocab_and_pos, fallback_tag

__all__ = [
    "STRATEGIES", "Corruptor", "EmptyPoolError", "appearance_ratio_variance", "appearance_ratios", "corrupt",
    "pos_natural_distribution", "sample_pos_natural", "sample_random_placement", "AnnotatedSentence", "Corruption",
    "FeatureStore", "VtcSample", "read_corpus", "read_sentences", "split_of", "write_jsonl", "SyntheticConfig",
    "bayes_accuracy", "generate_synthetic", "PAD_INDEX", "UNK_INDEX", "PosSets", "Vocabulary",
    "build_vocab_and_pos", "fallback_tag", "SPLITS", "make_splits", "split_sentences",
]
