from typing import Dict, Sequence, Tuple

import numpy as np

from app.core.exceptions import ContractError
from app.services.nn.params import ParameterStore


class AdamState:
    """Momentos do Adam por parâmetro"""

    def __init__(self, lr: float = 3e-4, betas: Tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.step = 0
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}


def clip_grad_norm(grads: Dict[str, np.ndarray], max_norm: float) -> Tuple[Dict[str, np.ndarray], float]:
    """Reescala todos os gradientes para a norma global `max_norm`"""
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if total <= max_norm or total == 0.0:
        return grads, total
    factor = max_norm / (total + 1e-12)
    return {name: g * factor for name, g in grads.items()}, total


def clip_grad_norm_by_group(
    grads: Dict[str, np.ndarray],
    max_norm: float,
    prefixes: Sequence[str]
) -> Tuple[Dict[str, np.ndarray], Dict[str, float]]:
    """Clip independente por prefixo; nomes sem prefixo listado formam o grupo "shared"."""
    groups: Dict[str, Dict[str, np.ndarray]] = {}
    for name, grad in grads.items():
        group = next((p for p in prefixes if name.startswith(p)), "shared")
        groups.setdefault(group, {})[name] = grad

    clipped: Dict[str, np.ndarray] = {}
    norms: Dict[str, float] = {}
    for group, members in groups.items():
        members, norms[group] = clip_grad_norm(members, max_norm)
        clipped.update(members)
    return clipped, norms


def adam_step(params: ParameterStore, grads: Dict[str, np.ndarray], state: AdamState, lr: float = None) -> ParameterStore:
    """Um passo do Adam; devolve um novo store com a versão incrementada"""
    missing = [name for name in params.names() if name not in grads]
    if missing:
        raise ContractError(f"Gradiente ausente para {missing[:5]}")

    lr = state.lr if lr is None else lr
    beta1, beta2 = state.betas
    state.step += 1
    correction1 = 1.0 - beta1 ** state.step
    correction2 = 1.0 - beta2 ** state.step

    updated = {}
    for name, value in params.items():
        grad = grads[name]
        m = state.m.get(name)
        v = state.v.get(name)
        m = (1 - beta1) * grad if m is None else beta1 * m + (1 - beta1) * grad
        v = (1 - beta2) * grad * grad if v is None else beta2 * v + (1 - beta2) * grad * grad
        state.m[name], state.v[name] = m, v
        m_hat = m / correction1
        v_hat = v / correction2
        updated[name] = (value - lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(value.dtype)

    return ParameterStore(updated, version=params.version + 1)
