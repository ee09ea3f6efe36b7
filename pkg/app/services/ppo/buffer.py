from collections import deque
from typing import List, Optional

from app.core.exceptions import ContractError
from app.models import Transition
from app.services.ppo.gae import compute_gae


class ReplayBuffer:
    """Anel limitado de transições de um UAV (descarte FIFO)"""

    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ContractError(f"Capacidade inválida: {capacity}")
        self.capacity = capacity
        self._items = deque(maxlen=capacity)
        self.z_dim: Optional[int] = None

    def __len__(self) -> int:
        return len(self._items)

    def add(self, transition: Transition):
        dim = int(transition.z.shape[-1])
        if self.z_dim is None:
            self.z_dim = dim
        elif dim != self.z_dim:
            raise ContractError(f"Transição com z de dimensão {dim}, buffer usa {self.z_dim}")
        self._items.append(transition)

    def transitions(self) -> List[Transition]:
        return list(self._items)

    def clear(self):
        self._items.clear()

    def compute_advantages(self, gamma: float, gae_lambda: float, last_value: float = 0.0):
        """Preenche advantage/ret de cada transição do segmento atual"""
        items = self.transitions()
        if not items:
            return
        advantages, returns = compute_gae(
            [t.reward for t in items],
            [t.value for t in items],
            [t.done for t in items],
            gamma,
            gae_lambda,
            last_value
        )
        for transition, advantage, ret in zip(items, advantages, returns):
            transition.advantage = float(advantage)
            transition.ret = float(ret)
