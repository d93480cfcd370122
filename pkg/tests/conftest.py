import numpy as np
import pytest
from threadpoolctl import threadpool_limits

from vtc.forge import Corruptor, SyntheticConfig, generate_synthetic
from vtc.model import Batch, ModelConfig, VTCNetwork, pad_batch


@pytest.fixture(autouse=True, scope="session")
def single_thread():
    with threadpool_limits(1):
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def tiny_corpus():
    """60 synthetic sentences, their features and single-corruption samples."""
    cfg = SyntheticConfig(n_sentences=60, n_scenes=4, activities_per_scene=2, d_v=8)
    sentences, store = generate_synthetic(np.random.default_rng(7), cfg)
    samples = Corruptor("pos-natural", 1, random_state=7).fit(sentences).transform(sentences)
    return sentences, store, samples


def make_network(visual="gated", paths="conv+lstm", vocab_size=12, beta=(2, 3, 4, 5), d_v=3, seed=0, dtype=np.float64, **kw):
    cfg = ModelConfig(
        vocab_size=vocab_size, beta=list(beta), d_x=4, hidden=3, d_q=5, kernel_size=3, depth=2, max_len=10,
        d_v=d_v if visual != "none" else 0, visual=visual, paths=paths, **kw,
    )
    return VTCNetwork(cfg, seed=seed).astype(dtype)


def make_batch(rng, sequences, d_v=3, vocab_size=12, beta=(2, 3, 4, 5), with_targets=True):
    tokens, mask = pad_batch(sequences)
    omega = rng.normal(size=(len(sequences), d_v))
    if not with_targets:
        return Batch(tokens, mask, omega)
    positions = np.array([rng.integers(len(s)) for s in sequences])
    answers = np.array([beta[rng.integers(len(beta))] for _ in sequences])
    return Batch(tokens, mask, omega, positions, answers)
