from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import RunConfig
from app.core.exceptions import ContractError
from app.core.logging import get_logger
from app.models import NeighborSet, TrainingStats, Transition
from app.services.comm.graph import average_parameters, union_buffers
from app.services.encoder.gat import GraphBatch, encode_graph
from app.services.nn import ops
from app.services.nn.optim import AdamState, adam_step, clip_grad_norm, clip_grad_norm_by_group
from app.services.nn.params import ParameterStore
from app.services.nn.tape import ComputationTape, backward
from app.services.ppo.buffer import ReplayBuffer
from app.services.ppo.gae import normalize_advantages
from app.services.ppo.policy import gaussian_log_prob, policy_entropy, policy_forward, value_forward

logger = get_logger("ppo")

# Codificador e GAT ficam no grupo "shared"
GRAD_GROUPS = ("actor.", "critic.")


def clipped_surrogate(tape: ComputationTape, ratio: int, advantages: np.ndarray, clip_eps: float) -> int:
    """min(ρ·A, clip(ρ, 1−ε, 1+ε)·A) por amostra: nó (B,)"""
    adv = tape.constant(advantages)
    unclipped = ops.mul(tape, ratio, adv)
    clipped = ops.mul(tape, ops.clip(tape, ratio, 1.0 - clip_eps, 1.0 + clip_eps), adv)
    return ops.minimum(tape, unclipped, clipped)


def _encode_batch(tape: ComputationTape, params: Dict[str, int], batch: Sequence[Transition], config: RunConfig) -> int:
    """z do minibatch: reencodado a partir dos snapshots ou o z armazenado"""
    if not config.ppo.train_encoder or any(t.snapshot is None for t in batch):
        return tape.constant(np.stack([t.z for t in batch]))

    positions: Dict[int, int] = {}
    snapshots = []
    for t in batch:
        if id(t.snapshot) not in positions:
            positions[id(t.snapshot)] = len(snapshots)
            snapshots.append(t.snapshot)
    graph = GraphBatch.from_snapshots(snapshots, config.environment.max_neighbors + 1)
    z_all = encode_graph(tape, params, graph, config)
    rows = [graph.offsets[positions[id(t.snapshot)]] + t.node for t in batch]
    return ops.take_rows(tape, z_all, rows)


def minibatch_loss(
    tape: ComputationTape,
    params: Dict[str, int],
    batch: Sequence[Transition],
    advantages: np.ndarray,
    config: RunConfig
) -> Tuple[int, Dict[str, int]]:
    """Perda total do PPO e os nós de diagnóstico"""
    ppo = config.ppo
    z = _encode_batch(tape, params, batch, config)
    heads = policy_forward(tape, params, z, np.stack([t.serve_mask for t in batch]), config)

    move_logp = gaussian_log_prob(tape, heads, np.stack([t.action.move for t in batch]))
    serve_logp = ops.pick(tape, heads.log_probs, [t.action.serve_index for t in batch])
    new_logp = ops.add(tape, move_logp, serve_logp)
    ratio = ops.exp(tape, ops.sub(tape, new_logp, tape.constant([t.log_prob for t in batch])))

    surrogate = clipped_surrogate(tape, ratio, advantages, ppo.clip_eps)
    actor_loss = ops.scale(tape, ops.mean_all(tape, surrogate), -1.0)

    values = value_forward(tape, params, z)
    critic_loss = ops.mean_all(tape, ops.square(tape, ops.sub(tape, values, tape.constant([t.ret for t in batch]))))

    entropy = policy_entropy(tape, heads)
    loss = ops.add_n(tape, [
        actor_loss,
        ops.scale(tape, critic_loss, ppo.value_coef),
        ops.scale(tape, entropy, -ppo.entropy_coef),
    ])
    return loss, {"actor_loss": actor_loss, "critic_loss": critic_loss, "entropy": entropy, "ratio": ratio}


def ppo_update(
    pool: Sequence[Transition],
    store: ParameterStore,
    adam: AdamState,
    config: RunConfig,
    rng: np.random.Generator,
    uav: int = 0,
    episode: int = 0,
    dtype=np.float64
) -> Tuple[ParameterStore, TrainingStats]:
    """E épocas de PPO recortado sobre o pool unido; devolve o novo store"""
    ppo = config.ppo
    if len(pool) == 0:
        raise ContractError(f"Pool vazio para o UAV {uav}")

    pool = list(pool)
    advantages = normalize_advantages([t.advantage for t in pool])
    # Pool menor que um minibatch vira um único minibatch
    size = min(ppo.minibatch_size, len(pool))

    history: Dict[str, List[float]] = {"actor_loss": [], "critic_loss": [], "entropy": [], "clip_fraction": [], "mean_ratio": []}
    for _ in range(ppo.epochs):
        order = rng.permutation(len(pool))
        for start in range(0, len(pool), size):
            index = order[start:start + size]
            batch = [pool[i] for i in index]

            tape = ComputationTape(dtype)
            params = tape.bind(store)
            loss, diagnostics = minibatch_loss(tape, params, batch, advantages[index], config)
            grads = backward(tape, loss)
            if ppo.clip_per_group:
                grads, _ = clip_grad_norm_by_group(grads, ppo.max_grad_norm, GRAD_GROUPS)
            else:
                grads, _ = clip_grad_norm(grads, ppo.max_grad_norm)
            store = adam_step(store, grads, adam)

            ratio = tape.value(diagnostics["ratio"])
            history["actor_loss"].append(float(tape.value(diagnostics["actor_loss"])))
            history["critic_loss"].append(float(tape.value(diagnostics["critic_loss"])))
            history["entropy"].append(float(tape.value(diagnostics["entropy"])))
            history["clip_fraction"].append(float(np.mean(np.abs(ratio - 1.0) > ppo.clip_eps)))
            history["mean_ratio"].append(float(np.mean(ratio)))

    stats = TrainingStats(
        episode=episode,
        uav=uav,
        pool_size=len(pool),
        **{name: float(np.mean(values)) for name, values in history.items()}
    )
    logger.debug(
        f"PPO uav={uav} ep={episode}: actor={stats.actor_loss:.4f} critic={stats.critic_loss:.4f} "
        f"entropy={stats.entropy:.4f} clip={stats.clip_fraction:.3f} pool={stats.pool_size}"
    )
    return store, stats


def learner_round(
    buffers: Sequence[ReplayBuffer],
    stores: Sequence[ParameterStore],
    adam_states: Sequence[AdamState],
    neighbors: NeighborSet,
    config: RunConfig,
    rng: np.random.Generator,
    episode: int = 0,
    dtype=np.float64
) -> Tuple[List[ParameterStore], List[TrainingStats]]:
    """PPO em cada UAV seguido da média entre vizinhos; os buffers são esvaziados"""
    mode = config.ppo.sharing_mode
    if mode == "eps":
        pools = union_buffers(buffers, neighbors)
    else:
        pools = [buffer.transitions() for buffer in buffers]

    updated: List[ParameterStore] = []
    stats: List[TrainingStats] = []
    for m, pool in enumerate(pools):
        if not pool:
            logger.warning(f"Pool vazio para o UAV {m} no episódio {episode}; atualização ignorada")
            updated.append(stores[m])
            continue
        store, round_stats = ppo_update(pool, stores[m], adam_states[m], config, rng, uav=m, episode=episode, dtype=dtype)
        updated.append(store)
        stats.append(round_stats)

    if mode != "independent":
        updated = average_parameters(updated, neighbors)

    for buffer in buffers:
        buffer.clear()
    return updated, stats


def new_adam_state(config: RunConfig) -> AdamState:
    return AdamState(lr=config.ppo.learning_rate, betas=config.ppo.adam_betas, eps=config.ppo.adam_eps)
