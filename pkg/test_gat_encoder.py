#!/usr/bin/env python3

import sys
import os

# Adiciona o diretório do projeto ao path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import copy

import numpy as np
import pytest

from app.core.exceptions import ContractError
from app.models import GraphSnapshot, NeighborSet
from app.services.comm import merge_maps
from app.services.encoder import (
    GraphBatch,
    build_observations,
    encode_graph,
    encode_observations,
    encode_swarm,
    gat_layer,
    status_dim,
)
from app.services.nn import ComputationTape
from app.services.orchestrator.rollout import SwarmRunner
from app.services.ppo.policy import init_model

HEADS = 2
SLOPE = 0.01


def random_heads(rng, in_dim=4, out_dim=3):
    return [(rng.normal(size=(out_dim, in_dim)), rng.normal(size=out_dim)) for _ in range(HEADS)]


def reference_layer(features, neighbors, heads):
    """GAT escalar: laços explícitos sobre nós, cabeças e vizinhos"""
    outputs = []
    for i in range(len(features)):
        acc = np.zeros(heads[0][0].shape[0])
        for w, a in heads:
            projected = [w @ features[j] for j in neighbors[i]]
            scores = [float(a @ p) for p in projected]
            scores = [s if s >= 0 else SLOPE * s for s in scores]
            top = max(scores)
            weights = [np.exp(s - top) for s in scores]
            total = sum(weights)
            for weight, p in zip(weights, projected):
                acc += (weight / total) * p
        outputs.append(np.tanh(acc / len(heads)))
    return np.array(outputs)


def run_layer(features, neighbors, heads, width=None):
    width = width or max(len(row) for row in neighbors)
    index, mask = NeighborSet(neighbors).padded(width)
    tape = ComputationTape()
    params = {}
    for k, (w, a) in enumerate(heads):
        params[f"gat1.head{k}.W"] = tape.constant(w)
        params[f"gat1.head{k}.a"] = tape.constant(a)
    out = gat_layer(tape, params, tape.constant(features), index, mask, "gat1", HEADS, SLOPE)
    return tape.value(out), tape


# ---------------------------------------------------------------- camada GAT

def test_single_node_reduces_to_mean_projection():
    rng = np.random.default_rng(0)
    heads = random_heads(rng)
    g = rng.normal(size=(1, 4))
    out, _ = run_layer(g, [[0]], heads)
    expected = np.tanh(sum(w @ g[0] for w, _ in heads) / HEADS)
    assert np.allclose(out[0], expected, atol=1e-12)


def test_identical_neighbors_match_single_node():
    rng = np.random.default_rng(1)
    heads = random_heads(rng)
    g = np.tile(rng.normal(size=4), (3, 1))
    out, _ = run_layer(g, [[0, 1, 2], [1, 0], [2, 0]], heads)
    alone, _ = run_layer(g[:1], [[0]], heads)
    assert np.allclose(out[0], alone[0], atol=1e-12)


def test_star_graph_matches_scalar_reference():
    rng = np.random.default_rng(2)
    heads = random_heads(rng)
    g = rng.normal(size=(3, 4))
    star = [[0, 1, 2], [1, 0], [2, 0]]
    out, _ = run_layer(g, star, heads)
    assert np.allclose(out, reference_layer(g, star, heads), atol=1e-9)


@pytest.mark.parametrize("seed", [3, 4, 5])
def test_random_graphs_match_scalar_reference(seed):
    rng = np.random.default_rng(seed)
    heads = random_heads(rng)
    g = rng.normal(size=(5, 4))
    neighbors = []
    for i in range(5):
        others = [j for j in range(5) if j != i and rng.random() < 0.5]
        neighbors.append([i] + others)
    out, _ = run_layer(g, neighbors, heads, width=5)
    assert np.allclose(out, reference_layer(g, neighbors, heads), atol=1e-9)


def test_padding_width_does_not_change_output():
    rng = np.random.default_rng(6)
    heads = random_heads(rng)
    g = rng.normal(size=(3, 4))
    neighbors = [[0, 1], [1], [2, 0, 1]]
    tight, _ = run_layer(g, neighbors, heads, width=3)
    wide, _ = run_layer(g, neighbors, heads, width=6)
    assert np.allclose(tight, wide, atol=1e-12)


def test_neighbor_order_does_not_matter():
    rng = np.random.default_rng(7)
    heads = random_heads(rng)
    g = rng.normal(size=(4, 4))
    a, _ = run_layer(g, [[0, 1, 2, 3], [1], [2], [3]], heads)
    b, _ = run_layer(g, [[0, 3, 1, 2], [1], [2], [3]], heads)
    assert np.allclose(a[0], b[0], atol=1e-12)


def test_attention_weights_are_distributions_over_neighbors():
    rng = np.random.default_rng(8)
    heads = random_heads(rng)
    g = rng.normal(size=(3, 4))
    _, tape = run_layer(g, [[0, 1], [1], [2, 0, 1]], heads, width=3)
    softmaxes = [node.value for node in tape.nodes if node.op == "softmax"]
    assert len(softmaxes) == HEADS
    for alpha in softmaxes:
        assert np.allclose(alpha.sum(axis=-1), 1.0)
        assert alpha[0, 2] == 0.0 and alpha[1, 1] == 0.0 and alpha[1, 2] == 0.0


def test_empty_neighborhood_is_rejected():
    rng = np.random.default_rng(9)
    heads = random_heads(rng)
    tape = ComputationTape()
    params = {}
    for k, (w, a) in enumerate(heads):
        params[f"gat1.head{k}.W"] = tape.constant(w)
        params[f"gat1.head{k}.a"] = tape.constant(a)
    with pytest.raises(ContractError):
        gat_layer(
            tape, params, tape.constant(rng.normal(size=(2, 4))),
            np.zeros((2, 2), dtype=np.int64), np.array([[True, False], [False, False]]),
            "gat1", HEADS, SLOPE
        )


# ---------------------------------------------------------------- codificador completo

def encode(config, store, observations, neighbors):
    tape = ComputationTape()
    batch = GraphBatch.single(observations, neighbors, config.environment.max_neighbors + 1)
    return tape.value(encode_graph(tape, tape.bind(store), batch, config))


def test_encoder_output_dimensions(make_config, make_observation):
    config = make_config()
    rng = np.random.default_rng(10)
    store = init_model(config, seed=1)
    observations = [make_observation(rng, m) for m in range(3)]
    z = encode(config, store, observations, NeighborSet([[0, 1], [1, 0, 2], [2, 1]]))
    assert z.shape == (3, config.encoder.z_dim)
    assert config.encoder.z_dim == 4 + 5 + 6
    assert observations[0].status_vector().shape == (status_dim(2, 3),)


def test_masked_slot_contents_are_ignored(make_config, make_observation):
    config = make_config()
    rng = np.random.default_rng(11)
    store = init_model(config, seed=2)
    obs = make_observation(rng)
    obs.user_mask[:] = [1.0, 0.0, 0.0]
    obs.neighbor_mask[:] = [1.0, 0.0]
    other = copy.deepcopy(obs)
    other.user_features[1:] = rng.normal(size=(2, 3)) * 50
    other.neighbor_features[1] = [9.0, 9.0]

    tape = ComputationTape()
    params = tape.bind(store)
    a = tape.value(encode_observations(tape, params, [obs], config))
    b = tape.value(encode_observations(tape, params, [other], config))
    assert np.allclose(a, b, rtol=0.0, atol=1e-12)


def test_encoder_locality_follows_two_hops(make_config, make_observation):
    config = make_config()
    rng = np.random.default_rng(12)
    store = init_model(config, seed=3)
    path = NeighborSet([[0, 1], [1, 0, 2], [2, 1, 3], [3, 2]])
    observations = [make_observation(rng, m) for m in range(4)]
    base = encode(config, store, observations, path)

    two_hops = list(observations)
    two_hops[2] = make_observation(rng, 2)
    assert not np.allclose(encode(config, store, two_hops, path)[0], base[0])

    three_hops = list(observations)
    three_hops[3] = make_observation(rng, 3)
    assert np.allclose(encode(config, store, three_hops, path)[0], base[0], rtol=0.0, atol=1e-12)


def test_isolated_node_depends_only_on_itself(make_config, make_observation):
    config = make_config()
    rng = np.random.default_rng(13)
    store = init_model(config, seed=4)
    neighbors = NeighborSet([[0], [1, 2], [2, 1]])
    observations = [make_observation(rng, m) for m in range(3)]
    base = encode(config, store, observations, neighbors)
    changed = [observations[0], make_observation(rng, 1), make_observation(rng, 2)]
    assert np.allclose(encode(config, store, changed, neighbors)[0], base[0], rtol=0.0, atol=1e-12)


def test_neighbor_permutation_keeps_node_encoding(make_config, make_observation):
    config = make_config()
    rng = np.random.default_rng(14)
    store = init_model(config, seed=5)
    observations = [make_observation(rng, m) for m in range(3)]
    a = encode(config, store, observations, NeighborSet([[0, 1, 2], [1, 0], [2, 0]]))
    b = encode(config, store, observations, NeighborSet([[0, 2, 1], [1, 0], [2, 0]]))
    assert np.allclose(a[0], b[0], atol=1e-12)


def test_stacked_snapshots_match_separate_encodings(make_config, make_observation):
    config = make_config()
    rng = np.random.default_rng(15)
    store = init_model(config, seed=6)
    first = GraphSnapshot([make_observation(rng, m) for m in range(2)], NeighborSet([[0, 1], [1, 0]]))
    second = GraphSnapshot([make_observation(rng, m) for m in range(3)], NeighborSet([[0], [1, 2], [2, 1]]))

    tape = ComputationTape()
    batch = GraphBatch.from_snapshots([first, second], config.environment.max_neighbors + 1)
    stacked = tape.value(encode_graph(tape, tape.bind(store), batch, config))

    assert batch.offsets == [0, 2]
    assert np.allclose(stacked[:2], encode(config, store, first.observations, first.neighbors), atol=1e-12)
    assert np.allclose(stacked[2:], encode(config, store, second.observations, second.neighbors), atol=1e-12)


def test_swarm_encoding_with_equal_copies_matches_shared_store(make_config):
    config = make_config()
    runner = SwarmRunner(config)
    world = runner.env.reset(2, key=(0,))
    store = init_model(config, seed=7)
    neighbors, observations, shared = runner.observe(world, [store] * 3)
    copies = encode_swarm(observations, neighbors, [store.copy() for _ in range(3)], config)
    assert np.allclose(copies, shared, atol=1e-12)


def test_swarm_encoding_uses_each_uav_weights_for_its_own_second_layer(make_config):
    config = make_config()
    runner = SwarmRunner(config)
    world = runner.env.reset(2, key=(0,))
    isolated = NeighborSet([[0], [1], [2]])
    store = init_model(config, seed=8)
    other = init_model(config, seed=9)

    merged = merge_maps([uav.visited_grid for uav in world.uavs], isolated)
    observations = build_observations(world, runner.env, isolated, merged, config.encoder)

    mixed = encode_swarm(observations, isolated, [store, other, store], config)
    own = encode_swarm(observations, isolated, [other] * 3, config)
    shared = encode_swarm(observations, isolated, [store] * 3, config)
    assert np.allclose(mixed[1], own[1], atol=1e-12)
    assert np.allclose(mixed[0], shared[0], atol=1e-12)
