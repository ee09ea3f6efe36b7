"""
Grafo de comunicação variável no tempo e as três trocas entre vizinhos:
fusão de mapas, união de buffers e média de parâmetros.

Todas as trocas são síncronas e puras: as entradas não são modificadas e cada
saída é calculada a partir do mesmo snapshot.
"""

from typing import List, Sequence, Union

import numpy as np

from app.core.exceptions import ContractError, ShapeError
from app.models import NeighborSet, Transition, WorldState
from app.services.nn.params import ParameterStore


def build_neighbors(world: Union[WorldState, np.ndarray], comm_radius: float, max_neighbors: int) -> NeighborSet:
    """Vizinhos dentro de R_com, os mais próximos primeiro (empate: menor id)"""
    positions = world.uav_positions() if isinstance(world, WorldState) else np.asarray(world, dtype=np.float64)
    xy = positions[:, :2]
    members = []
    for m in range(len(xy)):
        distances = np.linalg.norm(xy - xy[m], axis=1)
        candidates = [j for j in range(len(xy)) if j != m and distances[j] <= comm_radius]
        candidates.sort(key=lambda j: (distances[j], j))
        members.append([m] + candidates[:max_neighbors])
    return NeighborSet(members)


def merge_maps(maps: Sequence[np.ndarray], neighbors: NeighborSet) -> List[np.ndarray]:
    """merged_m = OR dos mapas de N_m"""
    if len(maps) == 0:
        return []
    shape = maps[0].shape
    for grid in maps:
        if grid.shape != shape:
            raise ContractError(f"Mapas com shapes diferentes: {grid.shape} != {shape}")

    merged = []
    for m in range(len(maps)):
        grid = np.zeros(shape, dtype=bool)
        for j in neighbors[m]:
            grid |= maps[j].astype(bool)
        merged.append(grid)
    return merged


def union_buffers(buffers: Sequence, neighbors: NeighborSet) -> List[List[Transition]]:
    """Pool de amostragem de cada UAV: multiconjunto das transições de N_m"""
    dims = {buffer.z_dim for buffer in buffers if buffer.z_dim is not None}
    if len(dims) > 1:
        raise ContractError(f"Buffers com dimensões de estado diferentes: {sorted(dims)}")

    pools = []
    for m in range(len(buffers)):
        pool: List[Transition] = []
        for j in neighbors[m]:
            pool.extend(buffers[j].transitions())
        pools.append(pool)
    return pools


def average_parameters(stores: Sequence[ParameterStore], neighbors: NeighborSet) -> List[ParameterStore]:
    """θ_m ← média de θ_j sobre N_m (o próprio UAV incluído)"""
    for store in stores[1:]:
        try:
            stores[0].check_compatible(store)
        except ShapeError as e:
            raise ContractError(f"Média de parâmetros incompatíveis: {e}") from e

    averaged = []
    for m in range(len(stores)):
        group = [stores[j] for j in neighbors[m]]
        entries = {
            name: np.mean([s[name] for s in group], axis=0).astype(stores[m][name].dtype)
            for name in stores[m].names()
        }
        averaged.append(ParameterStore(entries, version=stores[m].version + 1))
    return averaged
