from typing import Any, Dict, List, Optional, Tuple
from enum import Enum

import numpy as np


class ViolationType(str, Enum):
    COLLISION = "collision"
    BOUNDARY = "boundary"


class Task:
    """Tarefa de um usuário: [S bits, C ciclos/bit]"""

    def __init__(self, size_bits: float, cycles_per_bit: float, done: bool = False):
        self.size_bits = float(size_bits)
        self.cycles_per_bit = float(cycles_per_bit)
        self.done = done

    @property
    def total_cycles(self) -> float:
        return self.size_bits * self.cycles_per_bit

    def mark_done(self):
        # Monotônica: uma tarefa concluída nunca volta atrás
        self.done = True

    def to_dict(self) -> Dict[str, Any]:
        return {"size_bits": self.size_bits, "cycles_per_bit": self.cycles_per_bit, "done": self.done}


class UserState:
    """Usuário terrestre móvel com sua fila de tarefas"""

    def __init__(self, id: int, position: np.ndarray, velocity: np.ndarray, task_queue: List[Task]):
        self.id = id
        self.position = np.asarray(position, dtype=np.float64)
        self.velocity = np.asarray(velocity, dtype=np.float64)
        self.task_queue = task_queue

    @property
    def remaining_tasks(self) -> int:
        return sum(1 for task in self.task_queue if not task.done)

    @property
    def head_task(self) -> Optional[Task]:
        """Primeira tarefa não processada (ordem da fila)"""
        for task in self.task_queue:
            if not task.done:
                return task
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "position": self.position.tolist(),
            "velocity": self.velocity.tolist(),
            "remaining_tasks": self.remaining_tasks
        }


class UavState:
    """UAV: posição 3-D (z = H), bateria e mapa de células visitadas"""

    def __init__(self, id: int, position: np.ndarray, battery: float, visited_grid: np.ndarray):
        self.id = id
        self.position = np.asarray(position, dtype=np.float64)
        self.battery = float(battery)
        self.visited_grid = visited_grid

    @property
    def xy(self) -> np.ndarray:
        return self.position[:2]

    def to_dict(self) -> Dict[str, Any]:
        return {"id": self.id, "position": self.position.tolist(), "battery": self.battery}


class SlotAction:
    """Ação executável de um UAV: deslocamento pedido e usuário escolhido"""

    def __init__(self, dx: float, dy: float, user_id: Optional[int] = None):
        self.dx = float(dx)
        self.dy = float(dy)
        self.user_id = user_id

    def to_dict(self) -> Dict[str, Any]:
        return {"dx": self.dx, "dy": self.dy, "user_id": self.user_id}


class EnergyBreakdown:
    """Energias de um UAV em um slot (J)"""

    def __init__(self, hover: float = 0.0, fly: float = 0.0, receive: float = 0.0, process: float = 0.0):
        self.hover = hover
        self.fly = fly
        self.receive = receive
        self.process = process

    @property
    def total(self) -> float:
        return self.hover + self.fly + self.receive + self.process

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return self.hover, self.fly, self.receive, self.process

    def to_dict(self) -> Dict[str, float]:
        return {"hover": self.hover, "fly": self.fly, "receive": self.receive, "process": self.process}


class SlotOutcome:
    """Resultado de um slot executado"""

    def __init__(
        self,
        slot: int,
        rewards: np.ndarray,
        energies: List[EnergyBreakdown],
        assignment: List[Tuple[int, int]],
        psi: float,
        collision_pairs: List[Tuple[int, int]],
        boundary_violators: List[int],
        displacements: np.ndarray
    ):
        self.slot = slot
        self.rewards = rewards
        self.energies = energies
        self.assignment = assignment
        self.psi = psi
        self.collision_pairs = collision_pairs
        self.boundary_violators = boundary_violators
        self.displacements = displacements

    @property
    def processed(self) -> int:
        return len(self.assignment)

    @property
    def total_energy(self) -> float:
        return float(sum(e.total for e in self.energies))

    def violators(self) -> Dict[int, List[ViolationType]]:
        result: Dict[int, List[ViolationType]] = {}
        for a, b in self.collision_pairs:
            result.setdefault(a, []).append(ViolationType.COLLISION)
            result.setdefault(b, []).append(ViolationType.COLLISION)
        for m in self.boundary_violators:
            result.setdefault(m, []).append(ViolationType.BOUNDARY)
        return result

    def to_dict(self) -> Dict[str, Any]:
        return {
            "slot": self.slot,
            "rewards": [float(r) for r in self.rewards],
            "energy": [e.to_dict() for e in self.energies],
            "alpha": [[n, m] for n, m in self.assignment],
            "psi": self.psi,
            "processed": self.processed,
            "collisions": [[a, b] for a, b in self.collision_pairs],
            "boundary_violators": list(self.boundary_violators)
        }


class WorldState:
    """Estado completo da simulação"""

    def __init__(self, config, users: List[UserState], uavs: List[UavState], streams: Dict[str, np.random.Generator]):
        self.config = config
        self.slot = 0
        self.users = users
        self.uavs = uavs
        self.streams = streams
        self.done = False
        self.tasks_total = sum(len(u.task_queue) for u in users)
        self.tasks_processed = 0

    @property
    def tasks_remaining(self) -> int:
        return sum(u.remaining_tasks for u in self.users)

    def uav_positions(self) -> np.ndarray:
        if not self.uavs:
            return np.zeros((0, 3))
        return np.stack([uav.position for uav in self.uavs])

    def user_positions(self) -> np.ndarray:
        if not self.users:
            return np.zeros((0, 2))
        return np.stack([user.position for user in self.users])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "slot": self.slot,
            "done": self.done,
            "uavs": [uav.to_dict() for uav in self.uavs],
            "users": [user.to_dict() for user in self.users],
            "tasks_total": self.tasks_total,
            "tasks_processed": self.tasks_processed
        }


class NeighborSet:
    """Listas de vizinhos por UAV; o próprio UAV vem sempre primeiro"""

    def __init__(self, members: List[List[int]]):
        self.members = members

    def __getitem__(self, m: int) -> List[int]:
        return self.members[m]

    def __len__(self) -> int:
        return len(self.members)

    def padded(self, width: int) -> Tuple[np.ndarray, np.ndarray]:
        """Matriz de índices (M, width) e máscara; posições vazias apontam para o próprio nó"""
        index = np.zeros((len(self.members), width), dtype=np.int64)
        mask = np.zeros((len(self.members), width), dtype=bool)
        for m, row in enumerate(self.members):
            index[m, :] = m
            index[m, :len(row)] = row
            mask[m, :len(row)] = True
        return index, mask

    def to_dict(self) -> Dict[str, Any]:
        return {str(m): list(row) for m, row in enumerate(self.members)}


class LocalObservation:
    """Visão parcial de um UAV"""

    def __init__(
        self,
        uav_id: int,
        own: np.ndarray,
        neighbor_features: np.ndarray,
        neighbor_mask: np.ndarray,
        user_features: np.ndarray,
        user_mask: np.ndarray,
        user_ids: List[int],
        grid: np.ndarray
    ):
        self.uav_id = uav_id
        self.own = own
        self.neighbor_features = neighbor_features
        self.neighbor_mask = neighbor_mask
        self.user_features = user_features
        self.user_mask = user_mask
        self.user_ids = user_ids
        self.grid = grid

    def status_vector(self) -> np.ndarray:
        """Vetor de status com os slots mascarados zerados"""
        neighbors = self.neighbor_features * self.neighbor_mask[:, None]
        users = self.user_features * self.user_mask[:, None]
        return np.concatenate([
            self.own,
            np.concatenate([neighbors, self.neighbor_mask[:, None]], axis=1).ravel(),
            np.concatenate([users, self.user_mask[:, None]], axis=1).ravel()
        ]).astype(np.float64)

    def serve_mask(self) -> np.ndarray:
        """Índices válidos da cabeça discreta; o último ("ninguém") é sempre válido"""
        return np.concatenate([self.user_mask.astype(bool), [True]])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "uav_id": self.uav_id,
            "own": self.own.tolist(),
            "neighbors": int(self.neighbor_mask.sum()),
            "users": [u for u in self.user_ids if u >= 0]
        }


class HybridAction:
    """Ação híbrida: deslocamento contínuo + índice do usuário atendido"""

    def __init__(self, move: np.ndarray, serve_index: int):
        self.move = np.asarray(move, dtype=np.float64)
        self.serve_index = int(serve_index)

    def to_dict(self) -> Dict[str, Any]:
        return {"move": self.move.tolist(), "serve_index": self.serve_index}


class GraphSnapshot:
    """Observações e vizinhanças de um slot, referenciadas pelas transições"""

    def __init__(self, observations: List[LocalObservation], neighbors: NeighborSet):
        self.observations = observations
        self.neighbors = neighbors


class Transition:
    """(z, a, log π, r, V, done) de um UAV em um slot"""

    def __init__(
        self,
        z: np.ndarray,
        action: HybridAction,
        log_prob: float,
        reward: float,
        value: float,
        done: bool,
        provenance: int,
        serve_mask: np.ndarray,
        snapshot: Optional[GraphSnapshot] = None,
        node: Optional[int] = None
    ):
        self.z = z
        self.action = action
        self.log_prob = float(log_prob)
        self.reward = float(reward)
        self.value = float(value)
        self.done = done
        self.provenance = provenance
        self.serve_mask = serve_mask
        self.snapshot = snapshot
        self.node = node
        self.advantage = 0.0
        self.ret = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "action": self.action.to_dict(),
            "log_prob": self.log_prob,
            "reward": self.reward,
            "value": self.value,
            "done": self.done,
            "provenance": self.provenance,
            "advantage": self.advantage,
            "return": self.ret
        }


class EpisodeMetrics:
    """Métricas agregadas de um episódio"""

    def __init__(
        self,
        episode: int,
        discounted_rewards: List[float],
        tasks_processed: int,
        tasks_total: int,
        collisions: int,
        boundary_violations: int,
        total_energy: float,
        slots: int,
        psi_series: List[float]
    ):
        self.episode = episode
        self.discounted_rewards = discounted_rewards
        self.tasks_processed = tasks_processed
        self.tasks_total = tasks_total
        self.collisions = collisions
        self.boundary_violations = boundary_violations
        self.total_energy = total_energy
        self.slots = slots
        self.psi_series = psi_series

    @property
    def mean_discounted_reward(self) -> float:
        return float(np.mean(self.discounted_rewards)) if self.discounted_rewards else 0.0

    @property
    def task_pct(self) -> float:
        if self.tasks_total == 0:
            return 100.0
        return 100.0 * self.tasks_processed / self.tasks_total

    @property
    def energy_per_task(self) -> float:
        # Sem tarefas processadas a razão não é definida
        if self.tasks_processed == 0:
            return float("nan")
        return self.total_energy / self.tasks_processed

    def to_row(self) -> Dict[str, Any]:
        row = {
            "episode": self.episode,
            "mean_discounted_reward": self.mean_discounted_reward,
        }
        for m, value in enumerate(self.discounted_rewards):
            row[f"discounted_reward_uav{m}"] = value
        row.update({
            "task_pct": self.task_pct,
            "collisions": self.collisions,
            "boundary_violations": self.boundary_violations,
            "total_energy_J": self.total_energy,
            "energy_per_task_J": self.energy_per_task,
            "tasks_processed": self.tasks_processed,
            "tasks_total": self.tasks_total,
            "slots": self.slots
        })
        return row

    def to_dict(self) -> Dict[str, Any]:
        data = self.to_row()
        data["psi_series"] = list(self.psi_series)
        return data


class TrainingStats:
    """Estatísticas de uma atualização PPO de um UAV"""

    def __init__(
        self,
        episode: int,
        uav: int,
        actor_loss: float,
        critic_loss: float,
        entropy: float,
        clip_fraction: float,
        mean_ratio: float,
        pool_size: int
    ):
        self.episode = episode
        self.uav = uav
        self.actor_loss = actor_loss
        self.critic_loss = critic_loss
        self.entropy = entropy
        self.clip_fraction = clip_fraction
        self.mean_ratio = mean_ratio
        self.pool_size = pool_size

    def to_dict(self) -> Dict[str, Any]:
        return {
            "episode": self.episode,
            "uav": self.uav,
            "actor_loss": self.actor_loss,
            "critic_loss": self.critic_loss,
            "entropy": self.entropy,
            "clip_fraction": self.clip_fraction,
            "mean_ratio": self.mean_ratio,
            "pool_size": self.pool_size
        }
