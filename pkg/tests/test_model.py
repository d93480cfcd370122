import numpy as np
import pytest

from vtc import tensor as T
from vtc.exceptions import CompatibilityError
from vtc.gradcheck import gradcheck
from vtc.model import Batch, pad_batch
from vtc.optim import Adam

from conftest import make_batch, make_network

MODES = [("gated", "conv+lstm"), ("none", "conv+lstm"), ("concat", "conv+lstm"), ("gated", "conv"), ("gated", "lstm")]


@pytest.mark.parametrize("visual,paths", MODES)
def test_end_to_end_gradcheck(visual, paths, rng):
    net = make_network(visual, paths)
    batch = make_batch(rng, [[2, 7, 3, 9, 5]])
    errs = gradcheck(lambda: net.forward(batch).loss, net.parameters(), coords_per_input=5, rng=rng)
    assert max(errs) < 1e-2


def test_every_parameter_receives_gradient(rng):
    net = make_network("gated")
    net.forward(make_batch(rng, [[2, 7, 3, 9], [4, 5, 6]])).loss.backward()
    for name, p in net.named_parameters().items():
        assert p.grad is not None and p.grad.shape == p.shape, name


def test_batch_equals_per_sentence(rng):
    net = make_network("gated")
    seqs = [[2, 7, 3, 9, 5, 6], [4, 5], [8, 3, 3, 10]]
    batch = make_batch(rng, seqs, with_targets=False)
    out = net.forward(batch)
    for i, s in enumerate(seqs):
        single = net.forward(Batch(np.array([s]), np.ones((1, len(s))), batch.omega[i : i + 1]))
        n = len(s)
        np.testing.assert_allclose(out.D.data[i, :n], single.D.data[0], rtol=1e-10)
        np.testing.assert_allclose(out.logits.data[i], single.logits.data[0], rtol=1e-10)
        np.testing.assert_allclose(out.T_star.data[i, n:], 0.0, atol=1e-300)


def test_bounded_pooled_and_video_vectors(rng):
    net = make_network("gated")
    for _ in range(50):
        out = net.forward(make_batch(rng, [list(rng.integers(0, 12, size=int(rng.integers(1, 10))))], with_targets=False))
        assert np.all(np.abs(out.u_q.data) <= 1) and np.all(np.abs(out.u_V.data) <= 1)
        assert abs(out.T_star.data.sum() - 1) < 1e-6


def test_text_only_ignores_video(rng):
    net = make_network("none")
    batch = make_batch(rng, [[2, 3, 4]], with_targets=False)
    out = net.forward(batch)
    np.testing.assert_array_equal(out.u_V.data, 0.0)
    batch.omega = None
    np.testing.assert_array_equal(net.forward(batch).logits.data, out.logits.data)


def test_visual_model_requires_features(rng):
    net = make_network("gated")
    with pytest.raises(CompatibilityError):
        net.forward(Batch(np.array([[2, 3]]), np.ones((1, 2))))


def test_uniform_network_loss_is_log_n_plus_log_beta(rng):
    net = make_network("gated")
    net.detector.W_d.data[:] = 0.0
    net.corrector.W_i.data[:] = 0.0
    out = net.forward(make_batch(rng, [[2, 3, 4, 5, 6, 7]]))
    assert out.loss.item() == pytest.approx(np.log(6) + np.log(4), rel=1e-12)


def test_hard_attention_consistency(rng):
    net = make_network("gated")
    out = net.forward(make_batch(rng, [[2, 7, 3, 9, 5]], with_targets=False))
    t_star = int(np.argmax(out.T_star.data[0]))
    hard = T.Tensor(np.eye(5)[t_star][None], dtype=np.float64)
    u = net.corrector.attend(hard, out.Q)
    np.testing.assert_array_equal(u.data[0], out.Q.data[0, t_star])


def test_single_step_decreases_loss_for_most_seeds():
    decreased = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        net = make_network("gated", seed=seed, dtype=np.float64)
        batch = make_batch(rng, [list(rng.integers(2, 12, size=6))])
        opt = Adam(net.parameters(), lr=1e-3)
        before = net.forward(batch).loss
        before.backward()
        opt.step()
        decreased += net.forward(batch).loss.item() < before.item()
    assert decreased >= 95


def test_state_dict_round_trip(rng):
    a, b = make_network("gated", seed=1), make_network("gated", seed=2)
    b.load_state_dict(a.state_dict())
    batch = make_batch(rng, [[2, 3, 4]], with_targets=False)
    np.testing.assert_array_equal(a.forward(batch).D.data, b.forward(batch).D.data)


def test_state_dict_shape_mismatch(rng):
    a = make_network("gated", vocab_size=12)
    b = make_network("gated", vocab_size=13)
    with pytest.raises(CompatibilityError):
        b.load_state_dict(a.state_dict())
    with pytest.raises(CompatibilityError):
        make_network("none").load_state_dict({})


def test_parameter_names_follow_checkpoint_contract():
    names = set(make_network("gated").named_parameters())
    expected = {"theta_x", "pos_table", "conv.0.kernel", "conv.0.bias", "conv.1.kernel", "conv.1.bias", "W_c", "W_d", "W_v", "W_g", "W_q", "W_V", "W_i"}
    assert expected <= names
    assert {n for n in names if n.startswith("lstm_l.")} == {"lstm_l.w_ih", "lstm_l.w_hh", "lstm_l.bias"}


def test_pad_batch():
    tokens, mask = pad_batch([[5, 6, 7], [8]])
    np.testing.assert_array_equal(tokens, [[5, 6, 7], [8, 0, 0]])
    np.testing.assert_array_equal(mask, [[1, 1, 1], [1, 0, 0]])
