"""
Cabeças de ator e crítico sobre o estado codificado z.

Ator: z → tanh(dense) → {média do deslocamento = tanh(dense)·V_max·Δt,
log-desvio independente do estado, logits de atendimento sobre U+1 slots}.
Crítico: z → tanh(dense) → dense(1).
"""

import math
from typing import Dict, List, Tuple

import numpy as np

from app.core.config import RunConfig
from app.models import HybridAction
from app.services.encoder.gat import gat_layer_spec
from app.services.encoder.network import encoder_layer_spec
from app.services.nn import ops
from app.services.nn.params import LayerSpec, ParameterStore, init_parameters
from app.services.nn.tape import ComputationTape

LOG_2PI = math.log(2.0 * math.pi)


def policy_layer_spec(config: RunConfig) -> List[LayerSpec]:
    z_dim = config.encoder.z_dim
    ppo = config.ppo
    serve_slots = config.encoder.max_obs_users + 1
    return [
        *LayerSpec.dense("actor.fc", ppo.actor_hidden, z_dim),
        *LayerSpec.dense("actor.move", 2, ppo.actor_hidden),
        LayerSpec("actor.log_std", (2,), init="constant", value=ppo.init_log_std),
        *LayerSpec.dense("actor.serve", serve_slots, ppo.actor_hidden),
        *LayerSpec.dense("critic.fc", ppo.critic_hidden, z_dim),
        *LayerSpec.dense("critic.out", 1, ppo.critic_hidden),
    ]


def model_layer_spec(config: RunConfig) -> List[LayerSpec]:
    """Todos os parâmetros de um UAV: codificador, GAT, ator e crítico"""
    return encoder_layer_spec(config) + gat_layer_spec(config) + policy_layer_spec(config)


def init_model(config: RunConfig, seed: int, dtype=np.float64) -> ParameterStore:
    return init_parameters(model_layer_spec(config), seed, dtype)


class PolicyHeads:
    """Ids dos nós produzidos pelo ator numa fita"""

    def __init__(self, mean: int, log_std: int, logits: int, log_probs: int):
        self.mean = mean
        self.log_std = log_std
        self.logits = logits
        self.log_probs = log_probs


def serve_mask_bias(serve_mask: np.ndarray) -> np.ndarray:
    return np.where(np.asarray(serve_mask, dtype=bool), 0.0, ops.MASK_LOGIT)


def policy_forward(
    tape: ComputationTape,
    params: Dict[str, int],
    z: int,
    serve_mask: np.ndarray,
    config: RunConfig
) -> PolicyHeads:
    """Parâmetros das duas cabeças para um lote z (B, z_dim)"""
    hidden = ops.tanh(tape, ops.dense_forward(tape, z, params["actor.fc.weight"], params["actor.fc.bias"]))
    move = ops.tanh(tape, ops.dense_forward(tape, hidden, params["actor.move.weight"], params["actor.move.bias"]))
    mean = ops.scale(tape, move, config.environment.step_limit)

    raw_logits = ops.dense_forward(tape, hidden, params["actor.serve.weight"], params["actor.serve.bias"])
    logits = ops.add(tape, raw_logits, tape.constant(serve_mask_bias(serve_mask)))
    return PolicyHeads(mean, params["actor.log_std"], logits, ops.log_softmax(tape, logits))


def value_forward(tape: ComputationTape, params: Dict[str, int], z: int) -> int:
    """V(z) para um lote: nó (B,)"""
    hidden = ops.tanh(tape, ops.dense_forward(tape, z, params["critic.fc.weight"], params["critic.fc.bias"]))
    value = ops.dense_forward(tape, hidden, params["critic.out.weight"], params["critic.out.bias"])
    return ops.reshape(tape, value, (-1,))


def gaussian_log_prob(tape: ComputationTape, heads: PolicyHeads, moves: np.ndarray) -> int:
    """log N(move | média, σ) somado nas duas componentes: nó (B,)"""
    diff = ops.sub(tape, tape.constant(moves), heads.mean)
    inv_std = ops.exp(tape, ops.scale(tape, heads.log_std, -1.0))
    normalized = ops.square(tape, ops.mul(tape, diff, inv_std))
    quadratic = ops.scale(tape, ops.sum_all(tape, normalized, axis=-1), -0.5)
    log_norm = ops.sum_all(tape, heads.log_std)
    return ops.sub(tape, ops.add(tape, quadratic, tape.constant(-LOG_2PI)), log_norm)


def policy_entropy(tape: ComputationTape, heads: PolicyHeads) -> int:
    """Entropia média do lote: gaussiana + categórica"""
    gaussian = ops.add(tape, ops.sum_all(tape, heads.log_std), tape.constant(1.0 + LOG_2PI))
    probs = ops.exp(tape, heads.log_probs)
    categorical = ops.scale(tape, ops.mean_all(tape, ops.sum_all(tape, ops.mul(tape, probs, heads.log_probs), axis=-1)), -1.0)
    return ops.add(tape, gaussian, categorical)


class ActionDistribution:
    """Distribuição híbrida de um UAV em um slot (valores numpy)"""

    def __init__(self, mean: np.ndarray, log_std: np.ndarray, log_probs: np.ndarray, serve_mask: np.ndarray):
        self.mean = np.asarray(mean, dtype=np.float64)
        self.log_std = np.asarray(log_std, dtype=np.float64)
        self.log_probs = np.asarray(log_probs, dtype=np.float64)
        self.serve_mask = np.asarray(serve_mask, dtype=bool)

    @property
    def std(self) -> np.ndarray:
        return np.exp(self.log_std)

    @property
    def probs(self) -> np.ndarray:
        probs = np.where(self.serve_mask, np.exp(self.log_probs), 0.0)
        return probs / probs.sum()

    def log_prob(self, action: HybridAction) -> float:
        z = (action.move - self.mean) / self.std
        gaussian = float(np.sum(-0.5 * z * z - self.log_std) - LOG_2PI)
        return gaussian + float(self.log_probs[action.serve_index])

    def entropy(self) -> float:
        probs = self.probs
        nonzero = probs > 0
        categorical = -float(np.sum(probs[nonzero] * np.log(probs[nonzero])))
        return float(np.sum(self.log_std)) + 1.0 + LOG_2PI + categorical

    def greedy(self) -> HybridAction:
        return HybridAction(self.mean.copy(), int(np.argmax(np.where(self.serve_mask, self.log_probs, -np.inf))))


def sample_action(dist: ActionDistribution, rng: np.random.Generator) -> Tuple[HybridAction, float]:
    """Amostra (deslocamento pré-recorte, índice) e o log π da amostra"""
    move = dist.mean + dist.std * rng.standard_normal(2)
    serve_index = int(rng.choice(len(dist.serve_mask), p=dist.probs))
    action = HybridAction(move, serve_index)
    return action, dist.log_prob(action)


def act(
    store: ParameterStore,
    z: np.ndarray,
    serve_mask: np.ndarray,
    config: RunConfig,
    dtype=np.float64
) -> Tuple[ActionDistribution, float]:
    """Distribuição e valor para um único z (sem gradiente)"""
    tape = ComputationTape(dtype)
    params = tape.bind(store)
    z_node = tape.constant(np.asarray(z)[None, :])
    heads = policy_forward(tape, params, z_node, np.asarray(serve_mask)[None, :], config)
    value = value_forward(tape, params, z_node)
    dist = ActionDistribution(
        tape.value(heads.mean)[0],
        tape.value(heads.log_std),
        tape.value(heads.log_probs)[0],
        serve_mask
    )
    return dist, float(tape.value(value)[0])
