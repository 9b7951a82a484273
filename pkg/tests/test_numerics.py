"""Tests for the autodiff engine, the Adam optimizer and the checkpoint codec."""

import zlib

import numpy as np
import pytest

from src.errors import CheckpointError, GraphError, ShapeError
from src.numerics import (
    Adam,
    AdamState,
    ModelParams,
    Tensor,
    adam_step,
    check_gradients,
    decode_checkpoint,
    encode_checkpoint,
    forward_op,
    no_grad,
    read_checkpoint,
    relative_error,
    write_checkpoint,
)
from src.numerics import ops
from src.numerics.checkpoint import MAGIC


def weighted_sum(out: Tensor, weights: np.ndarray) -> Tensor:
    """Scalarize an op output with fixed random weights so every entry matters."""
    return ops.sum_(ops.mul(out, weights))


# name -> (input shapes, builder(params) -> Tensor)
PRIMITIVES = {
    "add": ({"a": (2, 3), "b": (3,)}, lambda p: ops.add(p["a"], p["b"])),
    "sub": ({"a": (2, 3), "b": (2, 1)}, lambda p: ops.sub(p["a"], p["b"])),
    "mul": ({"a": (2, 3), "b": (2, 3)}, lambda p: ops.mul(p["a"], p["b"])),
    "scale": ({"a": (3, 2)}, lambda p: ops.scale(p["a"], -1.7)),
    "where": (
        {"a": (2, 3), "b": (2, 3)},
        lambda p: ops.where(np.array([[True, False, True], [False, False, True]]), p["a"], p["b"]),
    ),
    "matmul": ({"a": (2, 3), "b": (3, 4)}, lambda p: ops.matmul(p["a"], p["b"])),
    "batched_matmul": ({"a": (2, 2, 3), "b": (3, 4)}, lambda p: ops.matmul(p["a"], p["b"])),
    "transpose": ({"a": (2, 3, 4)}, lambda p: ops.transpose(p["a"], (1, 0, 2))),
    "reshape": ({"a": (2, 6)}, lambda p: ops.reshape(p["a"], (3, 4))),
    "slice": ({"a": (3, 5)}, lambda p: ops.slice_(p["a"], 1, 4, axis=-1)),
    "select": ({"a": (3, 4)}, lambda p: ops.select(p["a"], 1, axis=0)),
    "concat": ({"a": (2, 3), "b": (2, 2)}, lambda p: ops.concat([p["a"], p["b"]], axis=1)),
    "stack": ({"a": (2, 3), "b": (2, 3)}, lambda p: ops.stack([p["a"], p["b"]], axis=1)),
    "embedding": ({"table": (5, 3)}, lambda p: ops.embedding(p["table"], np.array([0, 2, 2, 4]))),
    "sum": ({"a": (3, 4)}, lambda p: ops.sum_(p["a"], axis=1)),
    "mean": ({"a": (3, 4)}, lambda p: ops.mean(p["a"], axis=0)),
    "sigmoid": ({"a": (2, 3)}, lambda p: ops.sigmoid(p["a"])),
    "tanh": ({"a": (2, 3)}, lambda p: ops.tanh(p["a"])),
    "relu": ({"a": (2, 3)}, lambda p: ops.relu(p["a"])),
    "softmax": ({"a": (2, 4)}, lambda p: ops.softmax(p["a"], axis=-1)),
    "layer_norm": (
        {"a": (3, 5), "gamma": (5,), "beta": (5,)},
        lambda p: ops.layer_norm(p["a"], p["gamma"], p["beta"]),
    ),
    "lstm_sequence": (
        {"x": (2, 3, 2), "w_ih": (2, 12), "w_hh": (3, 12), "bias": (12,)},
        lambda p: ops.lstm_sequence(p["x"], p["w_ih"], p["w_hh"], p["bias"]),
    ),
}


def stepwise_lstm(x, w_ih, w_hh, bias) -> Tensor:
    """The same recurrence composed from primitives one step at a time."""
    hidden = w_hh.shape[0]
    h = Tensor(np.zeros((x.shape[0], hidden)))
    c = Tensor(np.zeros((x.shape[0], hidden)))
    states = []
    for t in range(x.shape[1]):
        z = ops.add(ops.add(ops.matmul(ops.select(x, t, axis=1), w_ih), ops.matmul(h, w_hh)), bias)
        i = ops.sigmoid(ops.slice_(z, 0, hidden))
        f = ops.sigmoid(ops.slice_(z, hidden, 2 * hidden))
        g = ops.tanh(ops.slice_(z, 2 * hidden, 3 * hidden))
        o = ops.sigmoid(ops.slice_(z, 3 * hidden, 4 * hidden))
        c = ops.add(ops.mul(f, c), ops.mul(i, g))
        h = ops.mul(o, ops.tanh(c))
        states.append(h)
    return ops.stack(states, axis=1)


class TestLstmSequence:
    def test_matches_stepwise_composition(self, rng):
        params = ModelParams({
            "x": rng.standard_normal((3, 7, 4)),
            "w_ih": rng.standard_normal((4, 20)) * 0.5,
            "w_hh": rng.standard_normal((5, 20)) * 0.5,
            "bias": rng.standard_normal(20),
        })
        weights = rng.standard_normal((3, 7, 5))
        args = [params[name] for name in ("x", "w_ih", "w_hh", "bias")]

        fused = weighted_sum(ops.lstm_sequence(*args), weights)
        fused.backward()
        fused_grads = params.grads()
        params.zero_grad()
        reference = weighted_sum(stepwise_lstm(*args), weights)
        reference.backward()

        assert fused.item() == pytest.approx(reference.item(), rel=1e-12)
        for name, grad in params.grads().items():
            np.testing.assert_allclose(fused_grads[name], grad, rtol=1e-10, atol=1e-12)

    def test_rejects_mismatched_weights(self, rng):
        with pytest.raises(ShapeError, match="lstm_sequence"):
            ops.lstm_sequence(rng.standard_normal((2, 3, 4)), np.zeros((4, 8)), np.zeros((3, 12)), np.zeros(12))
        with pytest.raises(ShapeError, match="lstm_sequence"):
            ops.lstm_sequence(rng.standard_normal((2, 4)), np.zeros((4, 12)), np.zeros((3, 12)), np.zeros(12))


class TestForwardOps:
    def test_softmax_of_equal_logits_is_uniform(self):
        out = forward_op("softmax", Tensor([0.0, 0.0]))
        np.testing.assert_allclose(out.data, [0.5, 0.5])

    def test_sigmoid_of_zero(self):
        assert forward_op("sigmoid", Tensor(0.0)).item() == 0.5

    def test_mse_of_identical_tensors_is_zero(self):
        x = Tensor(np.arange(6.0).reshape(2, 3))
        assert forward_op("mse", x, x).item() == 0.0

    def test_softmax_rows_sum_to_one(self, rng):
        out = ops.softmax(Tensor(rng.standard_normal((4, 7)) * 30), axis=-1)
        np.testing.assert_allclose(out.data.sum(axis=-1), np.ones(4))
        assert np.isfinite(out.data).all()

    def test_aliases_and_dashes_dispatch(self):
        x = Tensor([[1.0, 2.0, 3.0]])
        gamma, beta = Tensor(np.ones(3)), Tensor(np.zeros(3))
        np.testing.assert_array_equal(
            forward_op("layer-norm", x, gamma, beta).data,
            forward_op("layer_norm", x, gamma, beta).data,
        )
        np.testing.assert_array_equal(
            forward_op("softmax_over_axis", x).data, forward_op("softmax", x).data
        )

    def test_unknown_op(self):
        with pytest.raises(ShapeError, match="unknown op"):
            forward_op("convolve", Tensor([1.0]))

    def test_matmul_shape_mismatch(self):
        with pytest.raises(ShapeError):
            ops.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))

    def test_mse_mask_selecting_nothing(self):
        x = Tensor(np.ones((2, 2)))
        with pytest.raises(ShapeError):
            ops.mse(x, x, mask=np.zeros((2, 2), dtype=bool))

    def test_masked_mse_ignores_unmasked_positions(self):
        pred = Tensor([[1.0, 100.0]])
        target = Tensor([[0.0, 0.0]])
        assert ops.mse(pred, target, mask=np.array([[True, False]])).item() == 1.0

    def test_bce_with_logits_is_stable_for_large_logits(self):
        loss = ops.bce_with_logits(Tensor([1000.0, -1000.0]), Tensor([1.0, 0.0]))
        assert loss.item() == pytest.approx(0.0, abs=1e-12)


class TestBackward:
    def test_linear_regression_gradient(self):
        w = Tensor([[0.0]], requires_grad=True)
        loss = ops.mse(ops.matmul(Tensor([[1.0]]), w), Tensor([[1.0]]))
        loss.backward()
        np.testing.assert_allclose(w.grad, [[-2.0]])

    def test_parameter_with_no_influence_gets_zero_gradient(self):
        w = Tensor([[0.5]], requires_grad=True)
        p = Tensor([[3.0]], requires_grad=True)
        loss = ops.add(
            ops.mse(ops.matmul(Tensor([[1.0]]), w), Tensor([[1.0]])),
            ops.sum_(ops.scale(p, 0.0)),
        )
        loss.backward()
        np.testing.assert_array_equal(p.grad, [[0.0]])

    def test_fan_out_accumulates(self):
        x = Tensor([2.0, -1.0], requires_grad=True)
        # d/dx sum(x*x + 3x) = 2x + 3
        loss = ops.sum_(ops.add(ops.mul(x, x), ops.scale(x, 3.0)))
        loss.backward()
        np.testing.assert_allclose(x.grad, [7.0, 1.0])

    def test_second_backward_raises(self):
        x = Tensor([1.0], requires_grad=True)
        loss = ops.sum_(ops.mul(x, x))
        loss.backward()
        with pytest.raises(GraphError):
            loss.backward()

    def test_non_scalar_loss_raises(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        with pytest.raises(GraphError, match="scalar"):
            ops.mul(x, x).backward()

    def test_detached_loss_raises(self):
        with pytest.raises(GraphError, match="detached"):
            ops.sum_(Tensor([1.0, 2.0])).backward()

    def test_no_grad_builds_no_tape(self):
        x = Tensor([1.0], requires_grad=True)
        with no_grad():
            out = ops.mul(x, x)
        assert not out.requires_grad
        assert out.is_leaf

    def test_deep_chain_does_not_hit_recursion_limit(self):
        x = Tensor([1.0], requires_grad=True)
        out = x
        for _ in range(5000):
            out = ops.scale(out, 1.0)
        ops.sum_(out).backward()
        np.testing.assert_allclose(x.grad, [1.0])


class TestGradients:
    @pytest.mark.parametrize("name", sorted(PRIMITIVES))
    def test_primitive_matches_finite_differences(self, name):
        shapes, build = PRIMITIVES[name]
        rng = np.random.default_rng(zlib.crc32(name.encode()))
        for _ in range(100):
            params = ModelParams({k: rng.standard_normal(s) for k, s in shapes.items()})
            out_shape = build(params).shape
            weights = rng.standard_normal(out_shape)
            report = check_gradients(lambda: weighted_sum(build(params), weights), params)
            assert report.passed(1e-4), f"{name}: {report.to_dict()}"

    def test_relative_error_criterion(self):
        # a zero gradient with round-off passes on the absolute term
        assert relative_error(np.zeros(3), np.full(3, 1e-12)) < 1e-4
        assert relative_error(np.zeros(3), np.full(3, 1e-6)) > 1e-4
        # large gradients are judged relatively
        assert relative_error(np.array([100.0]), np.array([100.0 + 1e-3])) < 1e-4
        assert relative_error(np.array([1.0]), np.array([1.0 + 1e-3])) > 1e-4

    def test_losses_match_finite_differences(self, rng):
        params = ModelParams({"pred": rng.standard_normal((3, 4)), "logits": rng.standard_normal(5)})
        target = rng.standard_normal((3, 4))
        mask = rng.random((3, 4)) > 0.4
        mask[0, 0] = True
        labels = (rng.random(5) > 0.5).astype(float)

        def loss():
            return ops.add(
                ops.mse(params["pred"], target, mask=mask),
                ops.bce_with_logits(params["logits"], labels),
            )

        assert check_gradients(loss, params).passed(1e-4)

    def test_composite_graph(self, rng):
        params = ModelParams({
            "w1": rng.standard_normal((3, 4)),
            "b1": rng.standard_normal(4),
            "w2": rng.standard_normal((4, 2)),
            "gamma": rng.standard_normal(4),
            "beta": rng.standard_normal(4),
        })
        x = rng.standard_normal((5, 3))
        y = rng.standard_normal((5, 2))

        def loss():
            h = ops.tanh(ops.add(ops.matmul(x, params["w1"]), params["b1"]))
            h = ops.layer_norm(h, params["gamma"], params["beta"])
            return ops.mse(ops.matmul(ops.softmax(h), params["w2"]), y)

        assert check_gradients(loss, params).passed(1e-4)

    def test_sampled_entries(self, rng):
        params = ModelParams({"w": rng.standard_normal((4, 3)), "b": rng.standard_normal(2)})
        x = rng.standard_normal((5, 4))

        def loss():
            return ops.sum_(ops.tanh(ops.matmul(x, params["w"])))

        report = check_gradients(loss, params, entries=3, seed=1)
        assert report.passed(1e-4)
        # "b" never enters the loss: zero analytic and numeric gradient
        assert report.errors["b"] == 0.0

    def test_wrong_backward_is_caught(self, rng):
        params = ModelParams({"w": rng.standard_normal(6)})

        def loss():
            w = params["w"]
            squared = Tensor.from_op(w.data ** 2, (w,), lambda g: (g * 3.0 * w.data,), "bad_square")
            return ops.sum_(squared)

        assert not check_gradients(loss, params).passed(1e-4)
        assert not check_gradients(loss, params, entries=2).passed(1e-4)


class TestAdam:
    def test_first_step_moves_by_learning_rate(self):
        params = ModelParams({"w": np.array([0.0])})
        adam_step(params, {"w": np.array([1.0])}, AdamState(lr=1e-3))
        np.testing.assert_allclose(params["w"].data, [-1e-3], rtol=1e-6)

    def test_zero_gradient_leaves_params_unchanged(self):
        params = ModelParams({"w": np.array([0.3, -0.2])})
        state = adam_step(params, {"w": np.zeros(2)}, AdamState())
        np.testing.assert_array_equal(params["w"].data, [0.3, -0.2])
        assert state.step_count == 1

    def test_missing_gradient(self):
        params = ModelParams({"w": np.zeros(2), "b": np.zeros(1)})
        with pytest.raises(GraphError, match="missing gradient"):
            adam_step(params, {"w": np.ones(2)}, AdamState())

    def test_gradient_shape_mismatch(self):
        params = ModelParams({"w": np.zeros(2)})
        with pytest.raises(GraphError, match="shape"):
            adam_step(params, {"w": np.ones(3)}, AdamState())

    def test_deterministic(self, rng):
        start = {"w": rng.standard_normal((3, 2))}
        grads = [{"w": rng.standard_normal((3, 2))} for _ in range(5)]
        results = []
        for _ in range(2):
            params = ModelParams(start)
            state = AdamState(lr=0.01)
            for g in grads:
                adam_step(params, g, state)
            results.append(params)
        assert results[0].equals(results[1])

    def test_minimizes_quadratic(self):
        params = ModelParams({"w": np.array([3.0, -2.0])})
        opt = Adam(params, lr=0.1)
        for _ in range(300):
            opt.zero_grad()
            ops.sum_(ops.mul(params["w"], params["w"])).backward()
            opt.step()
        np.testing.assert_allclose(params["w"].data, [0.0, 0.0], atol=5e-2)


class TestCheckpoint:
    @pytest.fixture
    def arrays(self, rng):
        return {
            "lstm.0.weight": rng.standard_normal((4, 8)),
            "bias": rng.standard_normal(8),
            "scalar": np.array(2.5),
        }

    def test_round_trip_is_exact(self, arrays, tmp_path):
        path = write_checkpoint(tmp_path / "m.icnf", arrays)
        loaded = read_checkpoint(path)
        assert list(loaded) == list(arrays)
        for name in arrays:
            assert loaded[name].shape == arrays[name].shape
            np.testing.assert_array_equal(loaded[name], arrays[name])

    def test_encoding_is_deterministic(self, arrays):
        assert encode_checkpoint(arrays) == encode_checkpoint(dict(arrays))

    def test_params_save_and_load(self, arrays, tmp_path):
        params = ModelParams(arrays)
        params.save(tmp_path / "p.icnf")
        assert ModelParams.load(tmp_path / "p.icnf").equals(params)

    def test_bad_magic(self, arrays):
        blob = b"XXXX" + encode_checkpoint(arrays)[4:]
        with pytest.raises(CheckpointError, match="magic"):
            decode_checkpoint(blob)

    def test_unsupported_version(self, arrays):
        blob = bytearray(encode_checkpoint(arrays))
        blob[4:8] = (99).to_bytes(4, "little")
        with pytest.raises(CheckpointError, match="version"):
            decode_checkpoint(bytes(blob))

    def test_truncated(self, arrays):
        blob = encode_checkpoint(arrays)
        with pytest.raises(CheckpointError, match="truncated"):
            decode_checkpoint(blob[:-5])

    def test_trailing_bytes(self, arrays):
        with pytest.raises(CheckpointError, match="trailing"):
            decode_checkpoint(encode_checkpoint(arrays) + b"\x00")

    def test_duplicate_name(self):
        one = encode_checkpoint({"w": np.ones(2)})
        body = one[len(MAGIC) + 8:]
        blob = MAGIC + (1).to_bytes(4, "little") + (2).to_bytes(4, "little") + body + body
        with pytest.raises(CheckpointError, match="duplicate"):
            decode_checkpoint(blob)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError, match="not found"):
            read_checkpoint(tmp_path / "absent.icnf")


class TestTorchOracle:
    def test_layer_norm_softmax_gradients_match_torch(self, rng):
        torch = pytest.importorskip("torch")
        x = rng.standard_normal((3, 6))
        gamma = rng.standard_normal(6)
        beta = rng.standard_normal(6)
        weights = rng.standard_normal((3, 6))

        params = ModelParams({"x": x, "gamma": gamma, "beta": beta})
        out = ops.softmax(ops.layer_norm(params["x"], params["gamma"], params["beta"]))
        weighted_sum(out, weights).backward()

        tx, tg, tb = (torch.tensor(a, dtype=torch.float64, requires_grad=True) for a in (x, gamma, beta))
        t_out = torch.softmax(torch.nn.functional.layer_norm(tx, (6,), tg, tb, eps=1e-5), dim=-1)
        (t_out * torch.tensor(weights)).sum().backward()

        np.testing.assert_allclose(out.data, t_out.detach().numpy(), rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(params["x"].grad, tx.grad.numpy(), rtol=1e-7, atol=1e-10)
        np.testing.assert_allclose(params["gamma"].grad, tg.grad.numpy(), rtol=1e-7, atol=1e-10)
        np.testing.assert_allclose(params["beta"].grad, tb.grad.numpy(), rtol=1e-7, atol=1e-10)

    def test_lstm_sequence_matches_torch(self, rng):
        torch = pytest.importorskip("torch")
        x = rng.standard_normal((2, 5, 3))
        w_ih = rng.standard_normal((3, 16)) * 0.5
        w_hh = rng.standard_normal((4, 16)) * 0.5
        bias = rng.standard_normal(16)
        weights = rng.standard_normal((2, 5, 4))

        params = ModelParams({"w_ih": w_ih, "w_hh": w_hh, "bias": bias})
        out = ops.lstm_sequence(x, params["w_ih"], params["w_hh"], params["bias"])
        weighted_sum(out, weights).backward()

        lstm = torch.nn.LSTM(3, 4, batch_first=True, dtype=torch.float64)
        with torch.no_grad():
            lstm.weight_ih_l0.copy_(torch.tensor(w_ih.T))
            lstm.weight_hh_l0.copy_(torch.tensor(w_hh.T))
            lstm.bias_ih_l0.copy_(torch.tensor(bias))
            lstm.bias_hh_l0.zero_()
        t_out, _ = lstm(torch.tensor(x))
        (t_out * torch.tensor(weights)).sum().backward()

        np.testing.assert_allclose(out.data, t_out.detach().numpy(), rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(params["w_ih"].grad, lstm.weight_ih_l0.grad.numpy().T, rtol=1e-7, atol=1e-10)
        np.testing.assert_allclose(params["w_hh"].grad, lstm.weight_hh_l0.grad.numpy().T, rtol=1e-7, atol=1e-10)
        np.testing.assert_allclose(params["bias"].grad, lstm.bias_ih_l0.grad.numpy(), rtol=1e-7, atol=1e-10)
