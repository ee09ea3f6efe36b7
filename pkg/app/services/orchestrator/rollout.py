from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import RunConfig
from app.core.logging import get_logger
from app.models import EpisodeMetrics, GraphSnapshot, NeighborSet, SlotAction, TrainingStats, Transition, WorldState
from app.services.comm.graph import build_neighbors, merge_maps
from app.services.encoder.gat import encode_swarm
from app.services.encoder.observation import build_observations
from app.services.environment.world import UavMecEnvironment
from app.services.nn.optim import AdamState
from app.services.nn.params import ParameterStore
from app.services.orchestrator.trace import TraceRecorder
from app.services.ppo.buffer import ReplayBuffer
from app.services.ppo.learner import learner_round, new_adam_state
from app.services.ppo.normalizer import ReturnScaler
from app.services.ppo.policy import act, sample_action

logger = get_logger("rollout")


class SwarmLearner:
    """Estado de aprendizado do enxame: buffers e momentos do Adam por UAV"""

    def __init__(self, config: RunConfig, num_uavs: int, dtype=np.float64):
        self.config = config
        self.dtype = dtype
        self.buffers = [ReplayBuffer(config.ppo.buffer_capacity) for _ in range(num_uavs)]
        self.adam_states: List[AdamState] = [new_adam_state(config) for _ in range(num_uavs)]
        self.stats: List[TrainingStats] = []
        self.scalers = [ReturnScaler(config.ppo.gamma, config.ppo.reward_clip) for _ in range(num_uavs)]

    def add(self, m: int, transition: Transition):
        """Guarda a transição do UAV m com a recompensa escalada (se habilitado)"""
        if self.config.ppo.normalize_returns:
            transition.reward = self.scalers[m](transition.reward, transition.done)
        self.buffers[m].add(transition)

    def round(
        self,
        stores: Sequence[ParameterStore],
        neighbors: NeighborSet,
        last_values: Sequence[float],
        rng: np.random.Generator,
        episode: int
    ) -> List[ParameterStore]:
        ppo = self.config.ppo
        for buffer, last_value in zip(self.buffers, last_values):
            buffer.compute_advantages(ppo.gamma, ppo.gae_lambda, last_value)
        stores, stats = learner_round(
            self.buffers, stores, self.adam_states, neighbors, self.config, rng, episode=episode, dtype=self.dtype
        )
        self.stats.extend(stats)
        return stores


class SwarmRunner:
    """Executa episódios completos: vizinhança → mapas → codificação → ações → slot"""

    def __init__(self, config: RunConfig, dtype=np.float64):
        self.config = config
        self.env = UavMecEnvironment(config.environment)
        self.dtype = dtype

    def observe(self, world: WorldState, stores: Sequence[ParameterStore]):
        """Vizinhos, observações e z de todos os UAVs no estado atual"""
        env_cfg = self.config.environment
        neighbors = build_neighbors(world, env_cfg.comm_radius, env_cfg.max_neighbors)
        merged = merge_maps([uav.visited_grid for uav in world.uavs], neighbors)
        observations = build_observations(world, self.env, neighbors, merged, self.config.encoder)
        z = encode_swarm(observations, neighbors, stores, self.config, self.dtype)
        return neighbors, observations, z

    def run_episode(
        self,
        stores: List[ParameterStore],
        episode: int,
        seed: int,
        greedy: bool = False,
        learner: Optional[SwarmLearner] = None,
        trace: Optional[TraceRecorder] = None,
        key: Optional[Tuple[int, ...]] = None
    ) -> Tuple[EpisodeMetrics, List[ParameterStore]]:
        """Um episódio; com `learner` as rodadas de PPO acontecem na cadência configurada.

        O mundo vem de `key` (padrão `(episode,)`, o espaço do treino).
        """
        cfg = self.config
        gamma = cfg.ppo.gamma
        cadence = cfg.ppo.update_every
        world = self.env.reset(seed, key=(episode,) if key is None else key)
        num_uavs = len(world.uavs)
        policy_rng = world.streams["policy"]

        if trace is not None:
            trace.record_initial(world)

        discounted = np.zeros(num_uavs)
        psi_series: List[float] = []
        collisions = boundary = 0
        total_energy = 0.0

        while not world.done:
            neighbors, observations, z = self.observe(world, stores)
            snapshot = GraphSnapshot(observations, neighbors) if learner is not None else None

            slot_actions, pending = [], []
            for m, obs in enumerate(observations):
                serve_mask = obs.serve_mask()
                dist, value = act(stores[m], z[m], serve_mask, cfg, self.dtype)
                if greedy:
                    action = dist.greedy()
                    log_prob = dist.log_prob(action)
                else:
                    action, log_prob = sample_action(dist, policy_rng)
                index = action.serve_index
                user_id = obs.user_ids[index] if index < len(obs.user_ids) else None
                slot_actions.append(SlotAction(action.move[0], action.move[1], user_id))
                pending.append((action, log_prob, value, serve_mask))

            slot = world.slot
            outcome = self.env.execute_slot(world, slot_actions)

            discounted += (gamma ** slot) * outcome.rewards
            psi_series.append(outcome.psi)
            collisions += len(outcome.collision_pairs)
            boundary += len(outcome.boundary_violators)
            total_energy += outcome.total_energy

            if trace is not None:
                trace.record_slot(world, outcome, neighbors)

            if learner is not None:
                for m, (action, log_prob, value, serve_mask) in enumerate(pending):
                    learner.add(m, Transition(
                        z=z[m],
                        action=action,
                        log_prob=log_prob,
                        reward=float(outcome.rewards[m]),
                        value=value,
                        done=world.done,
                        provenance=m,
                        serve_mask=serve_mask,
                        snapshot=snapshot,
                        node=m
                    ))
                if cadence > 0 and world.slot % cadence == 0 and not world.done:
                    stores = self._learn(world, stores, learner, episode, bootstrap=True)

        if learner is not None:
            stores = self._learn(world, stores, learner, episode, bootstrap=False)

        metrics = EpisodeMetrics(
            episode=episode,
            discounted_rewards=[float(r) for r in discounted],
            tasks_processed=world.tasks_processed,
            tasks_total=world.tasks_total,
            collisions=collisions,
            boundary_violations=boundary,
            total_energy=total_energy,
            slots=world.slot,
            psi_series=psi_series
        )
        return metrics, stores

    def _learn(
        self,
        world: WorldState,
        stores: List[ParameterStore],
        learner: SwarmLearner,
        episode: int,
        bootstrap: bool
    ) -> List[ParameterStore]:
        """Rodada de aprendizado na barreira; V(z_{t+1}) só quando o episódio continua"""
        if bootstrap:
            neighbors, observations, z = self.observe(world, stores)
            last_values = [
                act(stores[m], z[m], observations[m].serve_mask(), self.config, self.dtype)[1]
                for m in range(len(stores))
            ]
        else:
            env_cfg = self.config.environment
            neighbors = build_neighbors(world, env_cfg.comm_radius, env_cfg.max_neighbors)
            last_values = [0.0] * len(stores)
        return learner.round(stores, neighbors, last_values, world.streams["shuffle"], episode)
