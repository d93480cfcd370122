import numpy as np
import pytest

from vtc import tensor as T
from vtc.encoder import ConvNGramStack, LSTMCell, TextEncoder, fuse
from vtc.exceptions import ConfigError, DimensionError, LengthError, VocabIndexError
from vtc.gradcheck import gradcheck
from vtc.tensor import Tensor

F64 = np.float64


def encoder(rng, paths="conv+lstm", d_x=4, hidden=3, kernel_size=3, depth=2, vocab=15, **kw):
    enc = TextEncoder(vocab, d_x=d_x, hidden=hidden, kernel_size=kernel_size, depth=depth, n_max=12, paths=paths, rng=rng, **kw)
    for p in enc.params():
        p.data = p.data.astype(F64)
    return enc


def sig(v):
    return 1.0 / (1.0 + np.exp(-v))


def np_lstm(cell: LSTMCell, xs) -> np.ndarray:
    """Textbook LSTM run from a zero state; returns the last hidden state."""
    H = cell.hidden
    h, c = np.zeros(H), np.zeros(H)
    for x in xs:
        z = cell.w_ih.data @ x + cell.bias.data + cell.w_hh.data @ h
        i, f, g, o = sig(z[:H]), sig(z[H : 2 * H]), np.tanh(z[2 * H : 3 * H]), sig(z[3 * H :])
        c = f * c + i * g
        h = o * np.tanh(c)
    return h


def np_glu(I, kernel, bias):
    m = kernel.shape[0]
    pad = (m - 1) // 2
    padded = np.vstack([np.zeros((pad, I.shape[1])), I, np.zeros((pad, I.shape[1]))])
    C = np.array([sum(padded[t + j] @ kernel[j] for j in range(m)) + bias for t in range(I.shape[0])])
    d = I.shape[1]
    return C[:, :d] * sig(C[:, d:])


# ---------------------------------------------------------------- embedding and position gate


def test_embedding_rows_are_table_rows(rng):
    enc = encoder(rng)
    X = enc.embed(np.array([3, 0, 3]))
    np.testing.assert_array_equal(X.data, enc.embedding.theta_x.data[[3, 0, 3]])


def test_embedding_rejects_bad_index_and_length(rng):
    enc = encoder(rng)
    with pytest.raises(VocabIndexError):
        enc.embed(np.array([15]))
    with pytest.raises(LengthError):
        enc.embed(np.zeros(13, dtype=int))


def test_embedding_gradcheck(rng):
    enc = encoder(rng)
    probe = Tensor(rng.normal(size=(4, 4)), dtype=F64)
    assert max(gradcheck(lambda: T.tsum(enc.embed(np.array([1, 5, 5, 2])) * probe), [enc.embedding.theta_x])) < 1e-3


def test_position_gate_examples(rng):
    enc = encoder(rng)
    X = Tensor(rng.normal(size=(5, 4)), dtype=F64)
    enc.position.P.data[:] = 0.0
    np.testing.assert_allclose(enc.position.gate(X).data, 0.5 * X.data)
    enc.position.P.data[:] = 50.0
    np.testing.assert_allclose(enc.position.gate(X).data, X.data, rtol=1e-12)


def test_position_gate_matches_scalar_recomputation(rng):
    enc = encoder(rng)
    X = rng.normal(size=(6, 4))
    out = enc.position.gate(Tensor(X, dtype=F64)).data
    P = enc.position.P.data
    for t in range(6):
        for j in range(4):
            assert out[t, j] == pytest.approx(X[t, j] * (1 / (1 + np.exp(-P[t, j]))), rel=1e-12)


def test_position_gate_length_guard(rng):
    enc = encoder(rng)
    with pytest.raises(LengthError):
        enc.position.gate(Tensor(np.zeros((13, 4))))


# ---------------------------------------------------------------- conv N-gram


def test_glu_half_open_gate(rng):
    stack = ConvNGramStack(4, 3, 1, rng)
    kernel, bias = stack.layers[0]
    kernel.data[..., 4:] = 0.0
    bias.data[4:] = 0.0
    I = Tensor(rng.normal(size=(5, 4)))
    A = T.conv1d(I, kernel, bias).data[:, :4]
    np.testing.assert_allclose(stack.glu_layer(I, 0).data, 0.5 * A, rtol=1e-6)


def test_glu_closed_gate(rng):
    stack = ConvNGramStack(4, 3, 1, rng)
    kernel, bias = stack.layers[0]
    kernel.data[..., 4:] = 0.0
    bias.data[4:] = -1000.0
    np.testing.assert_allclose(stack.glu_layer(Tensor(rng.normal(size=(5, 4))), 0).data, 0.0, atol=1e-30)


def test_glu_matches_straight_line_oracle(rng):
    stack = ConvNGramStack(4, 3, 1, rng)
    for p in stack.layers[0]:
        p.data = p.data.astype(F64)
    I = rng.normal(size=(6, 4))
    kernel, bias = stack.layers[0]
    np.testing.assert_allclose(stack.glu_layer(Tensor(I, dtype=F64), 0).data, np_glu(I, kernel.data, bias.data), rtol=1e-12, atol=1e-15)


def test_conv_stack_even_kernel():
    with pytest.raises(ConfigError):
        ConvNGramStack(4, 4, 2, np.random.default_rng(0))


def test_conv_ngram_depth_one_composition(rng):
    enc = encoder(rng, paths="conv", depth=1)
    kernel, bias = enc.conv.layers[0]
    kernel.data[..., 4:] = 0.0
    bias.data[4:] = 0.0
    enc.position.P.data[:] = 0.0
    X = rng.normal(size=(5, 4))
    expected = 0.5 * T.conv1d(Tensor(0.5 * X, dtype=F64), kernel, bias).data[:, :4]
    np.testing.assert_allclose(enc.conv_ngram(Tensor(X, dtype=F64)).data, expected, rtol=1e-12)


def test_conv_ngram_chains_position_gate_then_layers(rng):
    enc = encoder(rng, paths="conv", depth=2)
    X = rng.normal(size=(6, 4))
    phi = X * sig(enc.position.P.data[:6])
    for kernel, bias in enc.conv.layers:
        phi = np_glu(phi, kernel.data, bias.data)
    np.testing.assert_allclose(enc.conv_ngram(Tensor(X, dtype=F64)).data, phi, rtol=1e-11, atol=1e-14)


def test_conv_ngram_not_permutation_equivariant(rng):
    enc = encoder(rng, paths="conv")
    X = rng.normal(size=(5, 4))
    perm = np.array([4, 2, 0, 1, 3])
    a = enc.conv_ngram(Tensor(X[perm], dtype=F64)).data
    b = enc.conv_ngram(Tensor(X, dtype=F64)).data[perm]
    assert not np.allclose(a, b)


def test_conv_ngram_receptive_field(rng):
    enc = encoder(rng, paths="conv", kernel_size=3, depth=2)
    tokens = rng.integers(2, 15, size=(1, 10))
    mask = np.ones((1, 10))
    base = enc(tokens, mask).x_hat_C.data
    far = tokens.copy()
    far[0, 9] = 2 if tokens[0, 9] != 2 else 3
    moved = enc(far, mask).x_hat_C.data
    # depth * (m - 1) / 2 = 2, so positions 0..6 cannot see position 9
    np.testing.assert_array_equal(moved[0, :7], base[0, :7])
    assert not np.allclose(moved[0, 7:], base[0, 7:])


def test_conv_ngram_gradcheck(rng):
    enc = encoder(rng, paths="conv")
    X = Tensor(rng.normal(size=(5, 4)), requires_grad=True, dtype=F64)
    probe = Tensor(rng.normal(size=(5, 4)), dtype=F64)
    params = [X, enc.position.P] + [p for layer in enc.conv.layers for p in layer]
    assert max(gradcheck(lambda: T.tsum(enc.conv_ngram(X) * probe), params)) < 1e-2


# ---------------------------------------------------------------- fragment LSTMs


def test_single_word_sentence_has_zero_recurrent_reconstruction(rng):
    enc = encoder(rng, paths="lstm")
    out = enc(np.array([[4]]), np.ones((1, 1)))
    np.testing.assert_array_equal(out.x_hat_R.data, 0.0)


def test_first_position_sees_only_right_fragment(rng):
    enc = encoder(rng, paths="lstm")
    X = Tensor(rng.normal(size=(1, 5, 4)), dtype=F64)
    U_l, U_r = enc.fragment.fragments(X, np.ones((1, 5)))
    np.testing.assert_array_equal(U_l.data[0, 0], 0.0)
    np.testing.assert_array_equal(U_r.data[0, 4], 0.0)


def test_fragment_sweep_matches_quadratic_rerun(rng):
    enc = encoder(rng, paths="lstm")
    X = rng.normal(size=(4, 4))
    U_l, U_r = enc.fragment.fragments(Tensor(X[None], dtype=F64), np.ones((1, 4)))
    for t in range(4):
        left = np_lstm(enc.fragment.left, X[:t])
        right = np_lstm(enc.fragment.right, X[t + 1 :][::-1])
        np.testing.assert_allclose(U_l.data[0, t], left, rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(U_r.data[0, t], right, rtol=1e-12, atol=1e-15)
    x_hat_R = enc.fragment(Tensor(X[None], dtype=F64), np.ones((1, 4))).data[0]
    W_c = enc.fragment.W_c.data
    for t in range(4):
        expected = W_c @ np.concatenate([np_lstm(enc.fragment.left, X[:t]), np_lstm(enc.fragment.right, X[t + 1 :][::-1])])
        np.testing.assert_allclose(x_hat_R[t], expected, rtol=1e-11, atol=1e-14)


def test_recurrent_reconstruction_ignores_own_word(rng):
    enc = encoder(rng, paths="lstm")
    tokens = np.array([[3, 7, 9, 4, 11]])
    base = enc(tokens, np.ones((1, 5))).x_hat_R.data
    for t in range(5):
        mutated = tokens.copy()
        mutated[0, t] = 14
        np.testing.assert_array_equal(enc(mutated, np.ones((1, 5))).x_hat_R.data[0, t], base[0, t])


def test_left_and_right_lstms_are_independent(rng):
    enc = encoder(rng, paths="lstm")
    assert enc.fragment.left.w_ih is not enc.fragment.right.w_ih
    assert not np.allclose(enc.fragment.left.w_ih.data, enc.fragment.right.w_ih.data)
    H = enc.fragment.left.hidden
    np.testing.assert_array_equal(enc.fragment.left.bias.data[H : 2 * H], 1.0)


def test_padding_does_not_change_real_positions(rng):
    enc = encoder(rng)
    a = enc(np.array([[5, 6, 7]]), np.ones((1, 3))).x_hat.data[0]
    tokens = np.array([[5, 6, 7, 0, 0], [8, 9, 10, 11, 12]])
    mask = np.array([[1, 1, 1, 0, 0], [1, 1, 1, 1, 1]], dtype=float)
    b = enc(tokens, mask).x_hat.data[0, :3]
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)


# ---------------------------------------------------------------- fuse and full path


def test_fuse_examples(rng):
    a = Tensor(rng.normal(size=(3, 4)), dtype=F64)
    np.testing.assert_array_equal(fuse(a, Tensor(np.zeros((3, 4)), dtype=F64)).data, a.data)
    np.testing.assert_array_equal(fuse(a, Tensor(-a.data, dtype=F64)).data, 0.0)
    b = rng.normal(size=(3, 4))
    out = fuse(a, Tensor(b, dtype=F64)).data
    for idx in np.ndindex(3, 4):
        assert out[idx] == a.data[idx] + b[idx]
    with pytest.raises(DimensionError):
        fuse(a, Tensor(np.zeros((2, 4))))


@pytest.mark.parametrize("paths", ["conv+lstm", "conv", "lstm"])
def test_encoder_paths_sum(paths, rng):
    enc = encoder(rng, paths=paths)
    out = enc(np.array([[2, 3, 4, 5]]), np.ones((1, 4)))
    parts = [p.data for p in (out.x_hat_C, out.x_hat_R) if p is not None]
    np.testing.assert_allclose(out.x_hat.data, sum(parts))


def test_encoder_outputs_finite_over_random_trials():
    rng = np.random.default_rng(99)
    enc = encoder(rng)
    for _ in range(1000):
        n = int(rng.integers(1, 13))
        out = enc(rng.integers(0, 15, size=(1, n)), np.ones((1, n)))
        assert np.all(np.isfinite(out.x_hat.data))


def test_full_encoder_gradcheck(rng):
    enc = encoder(rng)
    tokens, mask = np.array([[2, 9, 4, 4, 13]]), np.ones((1, 5))
    probe = Tensor(rng.normal(size=(1, 5, 4)), dtype=F64)
    errs = gradcheck(lambda: T.tsum(enc(tokens, mask).x_hat * probe), enc.params(), coords_per_input=8, rng=rng)
    assert max(errs) < 1e-2


def test_unknown_paths_rejected():
    with pytest.raises(ConfigError):
        TextEncoder(10, paths="gru")
