#!/usr/bin/env python3

import sys
import os

# Adiciona o diretório do projeto ao path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pytest

from app.core.exceptions import CheckpointError, ConfigurationError, ContractError, ShapeError
from app.models import GraphSnapshot, Transition
from app.services.nn import AdamState, ComputationTape, LayerSpec, ParameterStore, adam_step, backward, init_parameters, ops
from app.services.nn.checkpoint import load_checkpoint, save_checkpoint
from app.services.nn.optim import clip_grad_norm, clip_grad_norm_by_group
from app.services.orchestrator.rollout import SwarmRunner
from app.services.ppo.learner import minibatch_loss
from app.services.ppo.policy import act, init_model, sample_action


def numeric_grad(fn, array, h=1e-6):
    """Diferenças centrais de fn() em relação a cada entrada de `array` (modificado in-place)"""
    grad = np.zeros_like(array)
    for index in np.ndindex(array.shape):
        original = array[index]
        array[index] = original + h
        plus = fn()
        array[index] = original - h
        minus = fn()
        array[index] = original
        grad[index] = (plus - minus) / (2 * h)
    return grad


# ---------------------------------------------------------------- primitivas

def test_dense_matches_manual_product():
    rng = np.random.default_rng(0)
    x, w, b = rng.normal(size=3), rng.normal(size=(2, 3)), rng.normal(size=2)
    tape = ComputationTape()
    y = ops.dense_forward(tape, tape.constant(x), tape.constant(w), tape.constant(b))
    expected = [sum(w[i, j] * x[j] for j in range(3)) + b[i] for i in range(2)]
    assert np.allclose(tape.value(y), expected, atol=1e-12)


def test_dense_identity_and_zero_map():
    x = np.array([1.5, -2.0, 0.25])
    tape = ComputationTape()
    identity = ops.dense_forward(tape, tape.constant(x), tape.constant(np.eye(3)), tape.constant(np.zeros(3)))
    zero = ops.dense_forward(tape, tape.constant(x), tape.constant(np.zeros((2, 3))), tape.constant(np.zeros(2)))
    assert np.array_equal(tape.value(identity), x)
    assert np.array_equal(tape.value(zero), np.zeros(2))


def test_dense_rejects_incompatible_shapes():
    tape = ComputationTape()
    with pytest.raises(ShapeError):
        ops.dense_forward(tape, tape.constant(np.ones(4)), tape.constant(np.ones((2, 3))))


def test_conv2d_matches_loop_oracle():
    rng = np.random.default_rng(1)
    img = rng.normal(size=(2, 7, 7))
    kernels = rng.normal(size=(3, 2, 3, 3))
    bias = rng.normal(size=3)
    stride = 2

    tape = ComputationTape()
    out = tape.value(ops.conv2d_forward(tape, tape.constant(img), tape.constant(kernels), stride, tape.constant(bias)))

    side = (7 - 3) // stride + 1
    expected = np.zeros((3, side, side))
    for o in range(3):
        for x in range(side):
            for y in range(side):
                total = bias[o]
                for c in range(2):
                    for i in range(3):
                        for j in range(3):
                            total += kernels[o, c, i, j] * img[c, stride * x + i, stride * y + j]
                expected[o, x, y] = total
    assert out.shape == (3, side, side)
    assert np.allclose(out, expected, atol=1e-12)


def test_conv2d_constant_field_and_impulse():
    tape = ComputationTape()
    ones = ops.conv2d_forward(tape, tape.constant(np.full((1, 4, 4), 2.0)), tape.constant(np.ones((1, 1, 2, 2))))
    assert np.allclose(tape.value(ones), 8.0)

    impulse = np.zeros((1, 5, 5))
    impulse[0, 2, 2] = 1.0
    kernel = np.arange(9.0).reshape(1, 1, 3, 3)
    out = tape.value(ops.conv2d_forward(tape, tape.constant(impulse), tape.constant(kernel)))
    # A correlação cruzada espalha o kernel invertido
    assert np.allclose(out[0], kernel[0, 0, ::-1, ::-1])


def test_conv2d_rejects_kernel_larger_than_image():
    tape = ComputationTape()
    with pytest.raises(ShapeError):
        ops.conv2d_forward(tape, tape.constant(np.ones((1, 2, 2))), tape.constant(np.ones((1, 1, 3, 3))))


def test_conv2d_gradients_match_finite_differences():
    rng = np.random.default_rng(2)
    img = rng.normal(size=(2, 2, 6, 6))
    kernels = rng.normal(size=(3, 2, 2, 2))
    bias = rng.normal(size=3)
    weights = rng.normal(size=(2, 3, 3, 3))

    def loss_value():
        tape = ComputationTape()
        out = ops.conv2d_forward(tape, tape.constant(img), tape.constant(kernels), 2, tape.constant(bias))
        return float(np.sum(tape.value(out) * weights))

    tape = ComputationTape()
    k_id = tape.param("k", kernels)
    b_id = tape.param("b", bias)
    out = ops.conv2d_forward(tape, tape.constant(img), k_id, 2, b_id)
    loss = ops.sum_all(tape, ops.mul(tape, out, tape.constant(weights)))
    grads = backward(tape, loss)

    assert np.allclose(grads["k"], numeric_grad(loss_value, kernels), atol=1e-6)
    assert np.allclose(grads["b"], numeric_grad(loss_value, bias), atol=1e-6)


def test_leaky_relu_values_and_gradient():
    tape = ComputationTape()
    x = tape.param("x", np.array([-3.0, 0.0, 2.0]))
    y = ops.leaky_relu(tape, x, 0.01)
    assert np.allclose(tape.value(y), [-0.03, 0.0, 2.0])
    grads = backward(tape, ops.sum_all(tape, y))
    assert np.allclose(grads["x"], [0.01, 1.0, 1.0])


def test_softmax_properties():
    tape = ComputationTape()
    equal = tape.value(ops.softmax(tape, tape.constant([3.0, 3.0, 3.0, 3.0])))
    single = tape.value(ops.softmax(tape, tape.constant([42.0])))
    huge = tape.value(ops.softmax(tape, tape.constant([1000.0, 1000.0])))
    masked = tape.value(ops.softmax(tape, tape.constant([0.0, ops.MASK_LOGIT])))

    assert np.allclose(equal, 0.25)
    assert np.array_equal(single, [1.0])
    assert np.all(np.isfinite(huge)) and np.allclose(huge, 0.5)
    assert masked[1] == 0.0 and masked[0] == 1.0

    rng = np.random.default_rng(3)
    batch = tape.value(ops.softmax(tape, tape.constant(rng.normal(size=(5, 4)))))
    assert np.allclose(batch.sum(axis=-1), 1.0)


def test_backward_of_linear_map_is_its_vector():
    rng = np.random.default_rng(4)
    c = rng.normal(size=6)
    tape = ComputationTape()
    x = tape.param("x", rng.normal(size=6))
    loss = ops.sum_all(tape, ops.mul(tape, x, tape.constant(c)))
    assert np.allclose(backward(tape, loss)["x"], c)


def test_backward_constant_loss_gives_zero_gradients():
    tape = ComputationTape()
    tape.param("w", np.ones(3))
    loss = tape.constant(5.0)
    grads = backward(tape, loss)
    assert np.array_equal(grads["w"], np.zeros(3))


def test_backward_requires_scalar_loss():
    tape = ComputationTape()
    x = tape.param("x", np.ones(3))
    with pytest.raises(ContractError):
        backward(tape, ops.scale(tape, x, 2.0))


def test_parameter_registered_twice_is_rejected():
    tape = ComputationTape()
    tape.param("w", np.ones(2))
    with pytest.raises(ContractError):
        tape.param("w", np.ones(2))


def test_shared_subgraph_accumulates_gradient():
    tape = ComputationTape()
    x = tape.param("x", np.array([2.0]))
    y = ops.mul(tape, x, x)
    loss = ops.sum_all(tape, ops.add(tape, y, x))
    assert np.allclose(backward(tape, loss)["x"], [5.0])


def test_replay_reproduces_recorded_values():
    rng = np.random.default_rng(5)
    tape = ComputationTape()
    x = tape.param("x", rng.normal(size=(2, 3)))
    w = tape.param("w", rng.normal(size=(4, 3)))
    y = ops.tanh(tape, ops.dense_forward(tape, x, w))
    ops.mean_all(tape, ops.softmax(tape, y))

    replayed = tape.replay()
    for node, value in zip(tape.nodes, replayed):
        assert np.array_equal(node.value, value)

    changed = tape.replay({x: np.zeros((2, 3))})
    assert np.allclose(changed[y], 0.0)


# ---------------------------------------------------------------- gradiente do modelo completo

def test_full_model_gradient_matches_finite_differences(make_config):
    """Codificador + GAT + ator + crítico, perda do PPO, em float64"""
    config = make_config()
    rng = np.random.default_rng(6)
    store = init_model(config, seed=11)
    # Vieses aleatórios tiram as pré-ativações do joelho da leaky-ReLU
    for name, array in store.items():
        if name.endswith(".bias"):
            array[...] = rng.normal(0.0, 0.1, size=array.shape)

    runner = SwarmRunner(config)
    world = runner.env.reset(3, key=(0,))
    stores = [store] * config.environment.num_uavs
    neighbors, observations, z = runner.observe(world, stores)
    snapshot = GraphSnapshot(observations, neighbors)

    batch = []
    for m, obs in enumerate(observations):
        dist, value = act(store, z[m], obs.serve_mask(), config)
        action, log_prob = sample_action(dist, rng)
        transition = Transition(z[m], action, log_prob, float(rng.normal()), value, False, m, obs.serve_mask(), snapshot, m)
        transition.ret = float(rng.normal())
        batch.append(transition)
    advantages = rng.normal(size=len(batch))

    def loss_value():
        tape = ComputationTape()
        loss, _ = minibatch_loss(tape, tape.bind(store), batch, advantages, config)
        return float(tape.value(loss))

    tape = ComputationTape()
    loss, _ = minibatch_loss(tape, tape.bind(store), batch, advantages, config)
    grads = backward(tape, loss)

    names = store.names()
    checked = failures = 0
    # Percorre todos os tensores em rodízio até 500 coordenadas
    for i in range(500):
        name = names[i % len(names)]
        array = store[name]
        index = tuple(int(rng.integers(d)) for d in array.shape)
        original = array[index]
        h = 1e-6
        array[index] = original + h
        plus = loss_value()
        array[index] = original - h
        minus = loss_value()
        array[index] = original
        numeric = (plus - minus) / (2 * h)
        analytic = grads[name][index]
        checked += 1
        if abs(analytic - numeric) > 1e-6 + 1e-4 * max(abs(analytic), abs(numeric)):
            failures += 1
    assert checked == 500
    assert failures <= checked // 100


# ---------------------------------------------------------------- parâmetros e Adam

def test_init_is_deterministic_per_seed():
    spec = LayerSpec.dense("fc", 4, 3) + LayerSpec.conv("conv", 2, 1, 3)
    a = init_parameters(spec, seed=9)
    b = init_parameters(spec, seed=9)
    c = init_parameters(spec, seed=10)
    assert a.allclose(b)
    assert not np.array_equal(a["fc.weight"], c["fc.weight"])
    assert np.array_equal(a["fc.bias"], np.zeros(4))
    limit = np.sqrt(6.0 / 7.0)
    assert np.all(np.abs(a["fc.weight"]) <= limit)


def test_init_rejects_zero_width_layer():
    with pytest.raises(ConfigurationError):
        init_parameters([LayerSpec("bad", (0, 3))], seed=0)


def test_adam_zero_gradient_keeps_values_and_bumps_version():
    store = ParameterStore({"w": np.array([1.0, -2.0])}, version=3)
    updated = adam_step(store, {"w": np.zeros(2)}, AdamState(lr=0.1))
    assert np.array_equal(updated["w"], store["w"])
    assert updated.version == 4


def test_adam_first_step_moves_by_learning_rate():
    store = ParameterStore({"w": np.array([1.0, 1.0])})
    updated = adam_step(store, {"w": np.array([0.5, -3.0])}, AdamState(lr=0.01))
    assert np.allclose(updated["w"], [0.99, 1.01], atol=1e-6)


def test_adam_is_deterministic_and_requires_all_gradients():
    grads = {"w": np.array([0.3, -0.1])}
    results = []
    for _ in range(2):
        store, state = ParameterStore({"w": np.ones(2)}), AdamState(lr=0.05)
        for _ in range(5):
            store = adam_step(store, grads, state)
        results.append(store["w"])
    assert np.array_equal(results[0], results[1])

    with pytest.raises(ContractError):
        adam_step(ParameterStore({"w": np.ones(2), "b": np.ones(1)}), grads, AdamState())


def test_clip_grad_norm_rescales_to_max_norm():
    grads = {"a": np.array([3.0]), "b": np.array([4.0])}
    clipped, total = clip_grad_norm(grads, 1.0)
    assert total == pytest.approx(5.0)
    assert np.sqrt(clipped["a"][0] ** 2 + clipped["b"][0] ** 2) == pytest.approx(1.0)
    unchanged, _ = clip_grad_norm(grads, 10.0)
    assert unchanged is grads


def test_group_clipping_keeps_small_groups_untouched():
    grads = {
        "actor.w": np.array([0.1, 0.2]),
        "critic.w": np.array([3e6, 4e6]),
        "enc.w": np.array([0.3]),
    }
    clipped, norms = clip_grad_norm_by_group(grads, 0.5, ("actor.", "critic."))
    assert np.array_equal(clipped["actor.w"], grads["actor.w"])
    assert np.array_equal(clipped["enc.w"], grads["enc.w"])
    assert np.linalg.norm(clipped["critic.w"]) == pytest.approx(0.5)
    assert norms["critic."] == pytest.approx(5e6)
    assert set(norms) == {"actor.", "critic.", "shared"}

    # Clip global: o crítico esmaga o gradiente do ator
    flat, _ = clip_grad_norm(grads, 0.5)
    assert np.linalg.norm(flat["actor.w"]) < 1e-7


# ---------------------------------------------------------------- checkpoint

def test_checkpoint_round_trip_is_bit_exact(tmp_path, make_config):
    store = init_model(make_config(), seed=1)
    store = ParameterStore(store.entries, version=7)
    path = save_checkpoint(str(tmp_path / "model.ckpt"), store, seed=5, episode=12, uav=2)

    loaded, header = load_checkpoint(path)
    assert header["seed"] == 5 and header["episode"] == 12 and header["uav"] == 2
    assert loaded.version == 7
    assert loaded.names() == store.names()
    for name, array in store.items():
        assert loaded[name].dtype == array.dtype
        assert loaded[name].tobytes() == array.tobytes()


def test_checkpoint_rejects_foreign_and_truncated_files(tmp_path):
    foreign = tmp_path / "foreign.ckpt"
    foreign.write_bytes(b"not a checkpoint at all")
    with pytest.raises(CheckpointError):
        load_checkpoint(str(foreign))

    path = save_checkpoint(str(tmp_path / "full.ckpt"), ParameterStore({"w": np.ones(64)}), 0, 0)
    data = open(path, "rb").read()
    truncated = tmp_path / "truncated.ckpt"
    truncated.write_bytes(data[:-100])
    with pytest.raises(CheckpointError):
        load_checkpoint(str(truncated))

    with pytest.raises(CheckpointError):
        load_checkpoint(str(tmp_path / "missing.ckpt"))
