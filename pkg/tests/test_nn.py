import math

import mpmath
import numpy as np
import pytest

from tripletqa.errors import DataError, NumericError
from tripletqa.nn import (
    Adam,
    EmbeddingTable,
    GruParams,
    Linear,
    Tensor,
    Vocab,
    concat,
    encode_bidirectional,
    encode_sequence,
    grad_check,
    load_checkpoint,
    no_grad,
    restore_parameters,
    save_checkpoint,
    softmax,
    stack,
)


def rng(seed=0):
    return np.random.default_rng(seed)


def zero_params(*param_holders):
    for holder in param_holders:
        for _, t in holder.named_parameters():
            t.data[...] = 0.0


def make_embedding(tokens, dim, seed=0):
    vocab = Vocab.build([tokens])
    return EmbeddingTable(vocab, dim, rng(seed))


def scalar_gru_step(gru, x, h):
    """Independent scalar-loop recomputation of one GRU step."""
    H, D = gru.hidden_dim, gru.input_dim

    def gate(w, u, b, squash):
        out = []
        for i in range(H):
            acc = b.data[i]
            for j in range(D):
                acc += w.data[i][j] * x[j]
            for j in range(H):
                acc += u.data[i][j] * h[j]
            out.append(squash(acc))
        return out

    sig = lambda v: 1.0 / (1.0 + math.exp(-v))
    z = gate(gru.wz, gru.uz, gru.bz, sig)
    r = gate(gru.wr, gru.ur, gru.br, sig)
    cand = []
    for i in range(H):
        acc = gru.bh.data[i]
        for j in range(D):
            acc += gru.wh.data[i][j] * x[j]
        for j in range(H):
            acc += gru.uh.data[i][j] * (r[j] * h[j])
        cand.append(math.tanh(acc))
    return [z[i] * h[i] + (1.0 - z[i]) * cand[i] for i in range(H)]


class TestSoftmax:
    def test_uniform(self):
        out = softmax(Tensor([0.0, 0.0]))
        assert np.allclose(out.data, [0.5, 0.5])

    def test_large_logits_stable(self):
        out = softmax(Tensor([1000.0, 0.0]))
        assert np.all(np.isfinite(out.data))
        assert out.data[0] == pytest.approx(1.0)
        assert out.data[1] == pytest.approx(0.0, abs=1e-12)

    def test_matches_extended_precision(self):
        logits = rng(1).normal(size=5)
        out = softmax(Tensor(logits)).data
        with mpmath.workdps(50):
            exps = [mpmath.exp(mpmath.mpf(float(v))) for v in logits]
            total = mpmath.fsum(exps)
            expected = [float(e / total) for e in exps]
        assert np.allclose(out, expected, atol=1e-12)

    def test_sums_to_one_and_shift_invariant(self):
        g = rng(2)
        for _ in range(100):
            logits = g.normal(size=int(g.integers(1, 8))) * 10
            out = softmax(Tensor(logits)).data
            assert abs(out.sum() - 1.0) < 1e-6
            shifted = softmax(Tensor(logits + 123.456)).data
            assert np.allclose(out, shifted, atol=1e-9)
            assert np.argmax(out) == np.argmax(shifted)


class TestEncoders:
    def test_zero_params_give_zero_states(self):
        emb = make_embedding(["a", "b", "c"], 4)
        gru = GruParams(4, 3, rng(1))
        zero_params(gru, emb)
        enc = encode_sequence(gru, emb, ["a", "b", "c"])
        for state in enc.states:
            assert np.allclose(state.data, 0.0)

    def test_single_token_is_one_step(self):
        emb = make_embedding(["a"], 4, seed=3)
        gru = GruParams(4, 3, rng(4))
        enc = encode_sequence(gru, emb, ["a"])
        manual = gru.step(emb.lookup("a"), gru.initial_state())
        assert np.allclose(enc.final.data, manual.data)
        assert len(enc.states) == 1

    def test_empty_sequence_errors(self):
        emb = make_embedding(["a"], 4)
        gru = GruParams(4, 3, rng(0))
        with pytest.raises(NumericError):
            encode_sequence(gru, emb, [])

    def test_matches_scalar_loop_oracle(self):
        emb = make_embedding(["a", "b", "c"], 5, seed=7)
        gru = GruParams(5, 4, rng(8))
        enc = encode_sequence(gru, emb, ["a", "b", "c"])
        h = [0.0] * 4
        for token in ["a", "b", "c"]:
            x = emb.weight.data[emb.vocab.index(token)]
            h = scalar_gru_step(gru, x, h)
        assert np.allclose(enc.final.data, h, atol=1e-12)

    def test_bidirectional_palindrome_symmetry(self):
        emb = make_embedding(["x", "y"], 4, seed=9)
        shared = GruParams(4, 3, rng(10))
        v = encode_bidirectional(shared, shared, emb, ["x", "y", "x"])
        assert np.allclose(v.data[:3], v.data[3:])

    def test_bidirectional_single_token(self):
        emb = make_embedding(["x"], 4, seed=11)
        fwd = GruParams(4, 3, rng(12))
        bwd = GruParams(4, 3, rng(13))
        v = encode_bidirectional(fwd, bwd, emb, ["x"])
        f = encode_sequence(fwd, emb, ["x"]).final
        b = encode_sequence(bwd, emb, ["x"]).final
        assert np.allclose(v.data, np.concatenate([f.data, b.data]))

    def test_bidirectional_is_composition(self):
        emb = make_embedding(["a", "b", "c", "d"], 4, seed=14)
        fwd = GruParams(4, 3, rng(15))
        bwd = GruParams(4, 3, rng(16))
        tokens = ["d", "a", "c", "b"]
        v = encode_bidirectional(fwd, bwd, emb, tokens)
        f = encode_sequence(fwd, emb, tokens).final
        b = encode_sequence(bwd, emb, list(reversed(tokens))).final
        assert np.allclose(v.data, np.concatenate([f.data, b.data]))
        assert v.shape == (6,)


class TestGradCheck:
    def test_quadratic_is_exact(self):
        p = Tensor(rng(20).normal(size=7), requires_grad=True)
        err = grad_check(lambda: (p * p).sum(), [p], epsilon=1e-4)
        assert err < 1e-6

    def test_gru_step_with_dot_loss(self):
        emb = make_embedding(["a"], 4, seed=21)
        gru = GruParams(4, 3, rng(22))
        target = Tensor(rng(23).normal(size=3))
        params = [t for _, t in gru.named_parameters()] + [emb.weight]

        def loss():
            h = gru.step(emb.lookup("a"), gru.initial_state())
            return h.dot(target)

        assert grad_check(loss, params) < 1e-4

    def test_composite_ops(self):
        g = rng(24)
        w = Tensor(g.normal(size=(3, 4)), requires_grad=True)
        u = Tensor(g.normal(size=4), requires_grad=True)
        m = Tensor(g.normal(size=(4, 3)), requires_grad=True)

        def loss():
            a = (w @ u).tanh()
            b = (m @ a).sigmoid()
            c = concat([a, b.take([0, 2])])
            d = stack([c, c * 2.0]) @ Tensor(np.ones(5))
            sm = softmax(w.row(1))
            return (d.sum() + sm.log().sum()) * 0.5 + (u / 2.0).relu().sum()

        assert grad_check(loss, [w, u, m], epsilon=1e-5) < 1e-6

    def test_nonfinite_loss_rejected(self):
        p = Tensor(np.array([1.0]), requires_grad=True)
        with pytest.raises(NumericError):
            grad_check(lambda: p.sum() + float("inf"), [p])


class TestAdam:
    def test_zero_gradient_leaves_params(self):
        p = Tensor(np.array([1.0, -2.0]), requires_grad=True)
        opt = Adam([p], lr=0.1)
        p.grad = np.zeros(2)
        opt.step()
        assert np.allclose(p.data, [1.0, -2.0])

    def test_first_step_magnitude_is_lr(self):
        p = Tensor(np.array([0.5, 0.5]), requires_grad=True)
        opt = Adam([p], lr=0.01)
        p.grad = np.array([3.0, -7.0])
        opt.step()
        assert np.allclose(np.abs(p.data - 0.5), 0.01, atol=1e-6)

    def test_quadratic_descent_matches_scalar_simulation(self):
        p = Tensor(np.array([2.0]), requires_grad=True)
        opt = Adam([p], lr=0.1)
        losses = []
        for _ in range(3):
            opt.zero_grad()
            loss = (p * p).sum()
            losses.append(loss.item())
            loss.backward()
            opt.step()

        # independent scalar replay of Adam on f(x) = x^2
        x, m, v = 2.0, 0.0, 0.0
        expected = []
        for t in range(1, 4):
            expected.append(x * x)
            g = 2.0 * x
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            m_hat = m / (1 - 0.9**t)
            v_hat = v / (1 - 0.999**t)
            x -= 0.1 * m_hat / (math.sqrt(v_hat) + 1e-8)
        assert np.allclose(losses, expected, atol=1e-12)
        assert losses[0] > losses[1] > losses[2]
        assert p.data[0] == pytest.approx(x, abs=1e-12)

    def test_shape_mismatch_rejected(self):
        p = Tensor(np.zeros(3), requires_grad=True)
        opt = Adam([p])
        p.grad = np.zeros(4)
        with pytest.raises(NumericError):
            opt.step()


class TestDeterminismAndCheckpoint:
    def test_same_seed_identical_init(self):
        a = GruParams(4, 3, rng(42))
        b = GruParams(4, 3, rng(42))
        for (_, ta), (_, tb) in zip(a.named_parameters(), b.named_parameters()):
            assert np.array_equal(ta.data, tb.data)

    def test_padding_row_zero_and_unk_trained(self):
        emb = make_embedding(["a"], 4, seed=1)
        assert np.allclose(emb.weight.data[0], 0.0)
        assert not np.allclose(emb.weight.data[1], 0.0)

    def test_checkpoint_round_trip(self, tmp_path):
        gru = GruParams(4, 3, rng(5))
        named = [(f"gru.{n}", t) for n, t in gru.named_parameters()]
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, {"kind": "test", "tokens": ["a", "b"]}, named)
        meta, stored = load_checkpoint(path)
        assert meta["kind"] == "test"
        fresh = GruParams(4, 3, rng(99))
        restore_parameters([(f"gru.{n}", t) for n, t in fresh.named_parameters()], stored)
        for (_, ta), (_, tb) in zip(gru.named_parameters(), fresh.named_parameters()):
            assert np.array_equal(ta.data, tb.data)

    def test_checkpoint_bad_magic(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"not a checkpoint")
        with pytest.raises(DataError):
            load_checkpoint(path)

    def test_embedding_file_load(self, tmp_path):
        emb = make_embedding(["apple", "pear"], 3, seed=2)
        path = tmp_path / "vectors.txt"
        path.write_text("apple 1.0 2.0 3.0\nmissing 9 9 9\n")
        assert emb.load_pretrained(path) == 1
        assert np.allclose(emb.weight.data[emb.vocab.index("apple")], [1, 2, 3])

    def test_embedding_file_dim_mismatch(self, tmp_path):
        emb = make_embedding(["apple"], 3)
        path = tmp_path / "vectors.txt"
        path.write_text("apple 1.0 2.0\n")
        with pytest.raises(DataError):
            emb.load_pretrained(path)


class TestNoGrad:
    def test_no_graph_recorded(self):
        p = Tensor(np.ones(3), requires_grad=True)
        with no_grad():
            out = (p * 2.0).sum()
        assert out._parents == ()
        with pytest.raises(NumericError):
            Tensor(np.ones(2)).backward()

    def test_linear_shapes(self):
        lin = Linear(4, 2, rng(0))
        out = lin(Tensor(np.ones(4)))
        assert out.shape == (2,)
