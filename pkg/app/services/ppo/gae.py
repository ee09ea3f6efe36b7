from typing import Sequence, Tuple

import numpy as np

from app.core.exceptions import ContractError


def compute_gae(
    rewards: Sequence[float],
    values: Sequence[float],
    dones: Sequence[bool],
    gamma: float,
    gae_lambda: float,
    last_value: float = 0.0
) -> Tuple[np.ndarray, np.ndarray]:
    """Vantagens GAE e retornos; `last_value` é V do estado após o último passo"""
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    if not (len(rewards) == len(values) == len(dones)):
        raise ContractError(
            f"Sequências com tamanhos diferentes: rewards={len(rewards)}, values={len(values)}, dones={len(dones)}"
        )

    advantages = np.zeros(len(rewards))
    gae = 0.0
    next_value = float(last_value)
    for t in range(len(rewards) - 1, -1, -1):
        not_done = 0.0 if dones[t] else 1.0
        delta = rewards[t] + gamma * next_value * not_done - values[t]
        gae = delta + gamma * gae_lambda * not_done * gae
        advantages[t] = gae
        next_value = values[t]
    return advantages, advantages + values


def normalize_advantages(advantages: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    """Média zero e desvio unitário (lotes de um elemento ficam como estão)"""
    advantages = np.asarray(advantages, dtype=np.float64)
    if len(advantages) < 2:
        return advantages.copy()
    return (advantages - advantages.mean()) / (advantages.std() + eps)
