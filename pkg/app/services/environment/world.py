from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import EnvironmentConfig
from app.core.exceptions import ConfigurationError, ContractError
from app.core.logging import get_logger
from app.core.random import make_streams
from app.models import EnergyBreakdown, SlotAction, SlotOutcome, Task, UavState, UserState, WorldState
from app.services.environment.physics import (
    channel_gain,
    data_rate,
    db_to_linear,
    dbm_to_watts,
    objective_psi,
    slot_energy,
)

logger = get_logger("environment")


def reflect(position: np.ndarray, velocity: np.ndarray, size: float) -> Tuple[np.ndarray, np.ndarray]:
    """Reflete componentes fora de [0, size] e inverte a velocidade correspondente"""
    position = position.copy()
    velocity = velocity.copy()
    while True:
        low = position < 0
        high = position > size
        if not (low.any() or high.any()):
            return position, velocity
        position = np.where(low, -position, position)
        position = np.where(high, 2 * size - position, position)
        velocity = np.where(low | high, -velocity, velocity)


class UavMecEnvironment:
    """Simulador do cenário UAV-MEC (verdade de campo de um episódio)"""

    def __init__(self, config: EnvironmentConfig):
        self.config = config
        self.power_gain = db_to_linear(config.power_gain_db)
        self.noise_power = dbm_to_watts(config.noise_dbm)
        self.grid_size = config.grid_size

    # ------------------------------------------------------------ reset

    def reset(self, seed: int, key: Sequence[int] = ()) -> WorldState:
        """Novo episódio: usuários, UAVs e tarefas sorteados a partir da semente"""
        cfg = self.config
        streams = make_streams(seed, tuple(key))

        placement = streams["placement"]
        user_xy = placement.uniform(0.0, cfg.area_size, size=(cfg.num_users, 2))
        uav_xy = self._place_uavs(placement)

        velocities = streams["mobility"].uniform(-cfg.user_speed_max, cfg.user_speed_max, size=(cfg.num_users, 2))

        tasks_rng = streams["tasks"]
        users = []
        for n in range(cfg.num_users):
            sizes = tasks_rng.uniform(*cfg.task_size_kb, size=cfg.tasks_per_user) * 1e3
            cycles = tasks_rng.uniform(*cfg.cycles_per_bit, size=cfg.tasks_per_user)
            queue = [Task(s, c) for s, c in zip(sizes, cycles)]
            users.append(UserState(n, user_xy[n], velocities[n], queue))

        uavs = [
            UavState(
                m,
                np.array([uav_xy[m, 0], uav_xy[m, 1], cfg.altitude]),
                cfg.battery_j,
                np.zeros((self.grid_size, self.grid_size), dtype=bool)
            )
            for m in range(cfg.num_uavs)
        ]
        return WorldState(cfg, users, uavs, streams)

    def _place_uavs(self, rng: np.random.Generator) -> np.ndarray:
        cfg = self.config
        if not cfg.reject_close_placement:
            return rng.uniform(0.0, cfg.area_size, size=(cfg.num_uavs, 2))

        # Amostragem sequencial com rejeição, limitada por placement_retries
        placed: List[np.ndarray] = []
        for m in range(cfg.num_uavs):
            for _ in range(cfg.placement_retries):
                candidate = rng.uniform(0.0, cfg.area_size, size=2)
                if all(np.linalg.norm(candidate - other) >= cfg.min_distance for other in placed):
                    placed.append(candidate)
                    break
            else:
                raise ConfigurationError(
                    f"Não foi possível posicionar {cfg.num_uavs} UAVs com d_min={cfg.min_distance} "
                    f"em L={cfg.area_size} após {cfg.placement_retries} tentativas"
                )
        return np.array(placed).reshape(cfg.num_uavs, 2)

    # ------------------------------------------------------------ dinâmica

    def step_users(self, world: WorldState, resample: bool = True) -> WorldState:
        """Move os usuários com quique nas bordas e sorteia as velocidades do próximo slot"""
        cfg = self.config
        for user in world.users:
            target = user.position + user.velocity * cfg.slot_duration
            user.position, user.velocity = reflect(target, user.velocity, cfg.area_size)
        if resample and world.users:
            velocities = world.streams["mobility"].uniform(
                -cfg.user_speed_max, cfg.user_speed_max, size=(len(world.users), 2)
            )
            for user, velocity in zip(world.users, velocities):
                user.velocity = velocity
        return world

    def move_uav(self, uav: UavState, dx: float, dy: float) -> Tuple[UavState, bool]:
        """Deslocamento recortado a V_max·Δt; fica parado se o alvo sai da área

        Retorna o UAV movido e se o alvo recortado deixou a área.
        """
        cfg = self.config
        request = np.array([dx, dy], dtype=np.float64)
        if not np.all(np.isfinite(request)):
            raise ContractError(f"Ação não finita para o UAV {uav.id}: {request}")

        norm = float(np.linalg.norm(request))
        if norm > cfg.step_limit:
            request = request * (cfg.step_limit / norm)

        target = uav.xy + request
        left_area = bool(np.any(target < 0) or np.any(target > cfg.area_size))
        if left_area:
            target = uav.xy.copy()

        moved = UavState(uav.id, np.array([target[0], target[1], cfg.altitude]), uav.battery, uav.visited_grid)
        return moved, left_area

    def coverage(self, world: WorldState) -> np.ndarray:
        """δ (N×M): usuário dentro do raio de cobertura do UAV"""
        if not world.users or not world.uavs:
            return np.zeros((len(world.users), len(world.uavs)), dtype=bool)
        horizontal = self.horizontal_distances(world)
        if self.config.coverage_3d:
            distance = np.sqrt(horizontal ** 2 + self.config.altitude ** 2)
        else:
            distance = horizontal
        return distance <= self.config.coverage_radius

    def horizontal_distances(self, world: WorldState) -> np.ndarray:
        users = world.user_positions()
        uavs = world.uav_positions()[:, :2]
        return np.linalg.norm(users[:, None, :] - uavs[None, :, :], axis=-1)

    def cell_of(self, xy: np.ndarray) -> Tuple[int, int]:
        """(linha, coluna) da célula do mapa; a borda L cai na última célula"""
        col = min(int(xy[0] // self.config.grid_cell), self.grid_size - 1)
        row = min(int(xy[1] // self.config.grid_cell), self.grid_size - 1)
        return row, col

    def collision_pairs(self, world: WorldState) -> List[Tuple[int, int]]:
        positions = world.uav_positions()[:, :2]
        pairs = []
        for a in range(len(positions)):
            for b in range(a + 1, len(positions)):
                if np.linalg.norm(positions[a] - positions[b]) < self.config.min_distance:
                    pairs.append((a, b))
        return pairs

    # ------------------------------------------------------------ slot

    def execute_slot(self, world: WorldState, actions: Sequence[SlotAction]) -> SlotOutcome:
        """Executa um slot completo; a ordem das etapas é parte do contrato"""
        cfg = self.config
        if world.done:
            raise ContractError("execute_slot chamado após o fim do episódio")
        if len(actions) != len(world.uavs):
            raise ContractError(f"Esperadas {len(world.uavs)} ações, recebidas {len(actions)}")

        # (i) movimento
        displacements = np.zeros((len(world.uavs), 2))
        boundary_violators = []
        for m, action in enumerate(actions):
            before = world.uavs[m].xy.copy()
            world.uavs[m], left_area = self.move_uav(world.uavs[m], action.dx, action.dy)
            displacements[m] = world.uavs[m].xy - before
            if left_area:
                boundary_violators.append(m)

        # (ii) colisões nas novas posições
        collisions = self.collision_pairs(world)

        # (iii) cobertura
        delta = self.coverage(world)

        # (iv) atribuição: menor id vence usuários disputados
        claimed = set()
        assignment: List[Tuple[int, int]] = []
        served: List[Optional[Task]] = [None] * len(world.uavs)
        rates = np.zeros(len(world.uavs))
        for m, action in enumerate(actions):
            n = action.user_id
            if n is None or n < 0 or n >= len(world.users) or n in claimed:
                continue
            user = world.users[n]
            task = user.head_task
            if task is None or not delta[n, m]:
                continue
            distance = float(np.sqrt(np.sum((user.position - world.uavs[m].xy) ** 2) + cfg.altitude ** 2))
            rates[m] = data_rate(
                channel_gain(distance, self.power_gain), cfg.user_tx_power, self.noise_power, cfg.bandwidth_hz
            )
            claimed.add(n)
            assignment.append((n, m))
            served[m] = task
            task.mark_done()

        # (v) energias
        energies: List[EnergyBreakdown] = [
            slot_energy(cfg, served[m], rates[m], float(np.linalg.norm(displacements[m])))
            for m in range(len(world.uavs))
        ]

        outcome = SlotOutcome(
            slot=world.slot,
            rewards=np.zeros(len(world.uavs)),
            energies=energies,
            assignment=assignment,
            psi=0.0,
            collision_pairs=collisions,
            boundary_violators=boundary_violators,
            displacements=displacements
        )

        # (vi) objetivo
        outcome.psi = objective_psi(outcome, cfg)

        # (vii) recompensas
        violated = np.zeros(len(world.uavs), dtype=bool)
        for a, b in collisions:
            violated[a] = violated[b] = True
        violated[boundary_violators] = True
        if cfg.cooperative_penalty and violated.any():
            violated[:] = True
        outcome.rewards = -outcome.psi - cfg.penalty * violated.astype(np.float64)

        # (viii) usuários se movem
        self.step_users(world)

        # (ix) baterias
        for uav, energy in zip(world.uavs, energies):
            was_alive = uav.battery > 0
            uav.battery = max(0.0, uav.battery - energy.total)
            if was_alive and uav.battery == 0.0:
                logger.warning(f"Bateria do UAV {uav.id} esgotada no slot {world.slot}")

        # (x) mapas de visita
        for uav in world.uavs:
            uav.visited_grid[self.cell_of(uav.xy)] = True

        # (xi) tempo
        world.tasks_processed += outcome.processed
        world.slot += 1
        world.done = world.slot >= cfg.num_slots or world.tasks_remaining == 0
        return outcome
