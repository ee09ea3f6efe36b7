from typing import List, Sequence

import numpy as np

from app.core.config import EncoderConfig
from app.models import LocalObservation, NeighborSet, WorldState

OWN_FEATURES = 5
NEIGHBOR_FEATURES = 2
USER_FEATURES = 3


def status_dim(max_neighbors: int, max_obs_users: int) -> int:
    """Tamanho do vetor de status (cada slot leva também sua máscara)"""
    return OWN_FEATURES + max_neighbors * (NEIGHBOR_FEATURES + 1) + max_obs_users * (USER_FEATURES + 1)


def build_observations(
    world: WorldState,
    env,
    neighbors: NeighborSet,
    merged_maps: Sequence[np.ndarray],
    encoder: EncoderConfig
) -> List[LocalObservation]:
    """Observação local de cada UAV a partir do estado do mundo"""
    cfg = env.config
    delta = env.coverage(world)
    horizontal = env.horizontal_distances(world) if world.users else np.zeros((0, len(world.uavs)))
    remaining = np.array([u.remaining_tasks for u in world.users], dtype=np.float64)

    observations = []
    for m, uav in enumerate(world.uavs):
        own = np.array([
            uav.xy[0] / cfg.area_size,
            uav.xy[1] / cfg.area_size,
            uav.battery / cfg.battery_j,
            min(cfg.coverage_radius / cfg.area_size, 1.0),
            min(cfg.comm_radius / cfg.area_size, 1.0),
        ])

        neighbor_features = np.zeros((cfg.max_neighbors, NEIGHBOR_FEATURES))
        neighbor_mask = np.zeros(cfg.max_neighbors)
        for slot, j in enumerate(neighbors[m][1:cfg.max_neighbors + 1]):
            other = world.uavs[j]
            neighbor_features[slot] = [
                other.battery / cfg.battery_j,
                min(float(np.linalg.norm(other.xy - uav.xy)) / cfg.comm_radius, 1.0),
            ]
            neighbor_mask[slot] = 1.0

        user_features = np.zeros((encoder.max_obs_users, USER_FEATURES))
        user_mask = np.zeros(encoder.max_obs_users)
        user_ids = [-1] * encoder.max_obs_users
        if world.users:
            candidates = [n for n in range(len(world.users)) if delta[n, m] and remaining[n] > 0]
            candidates.sort(key=lambda n: (horizontal[n, m], n))
            for slot, n in enumerate(candidates[:encoder.max_obs_users]):
                offset = (world.users[n].position - uav.xy) / cfg.coverage_radius
                user_features[slot] = [
                    np.clip(offset[0], -1.0, 1.0),
                    np.clip(offset[1], -1.0, 1.0),
                    remaining[n] / cfg.tasks_per_user,
                ]
                user_mask[slot] = 1.0
                user_ids[slot] = n

        grid = np.zeros((2, env.grid_size, env.grid_size))
        grid[0] = merged_maps[m]
        grid[1][env.cell_of(uav.xy)] = 1.0

        observations.append(LocalObservation(
            uav_id=m,
            own=own,
            neighbor_features=neighbor_features,
            neighbor_mask=neighbor_mask,
            user_features=user_features,
            user_mask=user_mask,
            user_ids=user_ids,
            grid=grid
        ))
    return observations
