"""
Camadas GAT modificadas e o codificador de grafo.

Por cabeça k, no nó i:
    ζ_ij = leaky(a^k · W^k g_j)              para j em N_i
    α_ij = softmax_j(ζ_ij)
    saída_i = tanh( (1/K) Σ_k Σ_j α_ij W^k g_j )

A vizinhança é um índice denso (n, K+1) com máscara; posições vazias
apontam para o próprio nó e recebem MASK_LOGIT antes do softmax.
"""

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import RunConfig
from app.core.exceptions import ContractError
from app.models import GraphSnapshot, LocalObservation, NeighborSet
from app.services.encoder.network import encode_observations
from app.services.nn import ops
from app.services.nn.params import LayerSpec, ParameterStore
from app.services.nn.tape import ComputationTape

GAT_LAYERS = ("gat1", "gat2")


class GraphBatch:
    """Um ou mais grafos empilhados num único grafo bloco-diagonal"""

    def __init__(self, observations: List[LocalObservation], index: np.ndarray, mask: np.ndarray, offsets: List[int]):
        self.observations = observations
        self.index = index
        self.mask = mask
        self.offsets = offsets

    def __len__(self) -> int:
        return len(self.observations)

    @classmethod
    def from_snapshots(cls, snapshots: Sequence[GraphSnapshot], width: int) -> "GraphBatch":
        observations: List[LocalObservation] = []
        indices, masks, offsets = [], [], []
        for snapshot in snapshots:
            offset = len(observations)
            index, mask = snapshot.neighbors.padded(width)
            indices.append(index + offset)
            masks.append(mask)
            offsets.append(offset)
            observations.extend(snapshot.observations)
        return cls(observations, np.concatenate(indices), np.concatenate(masks), offsets)

    @classmethod
    def single(cls, observations: List[LocalObservation], neighbors: NeighborSet, width: int) -> "GraphBatch":
        return cls.from_snapshots([GraphSnapshot(observations, neighbors)], width)


def gat_layer_spec(config: RunConfig) -> List[LayerSpec]:
    enc = config.encoder
    specs = []
    for layer, in_dim in zip(GAT_LAYERS, (enc.feature_dim, enc.gat_dim)):
        for k in range(enc.heads):
            specs.append(LayerSpec(f"{layer}.head{k}.W", (enc.gat_dim, in_dim), fan_in=in_dim, fan_out=enc.gat_dim))
            specs.append(LayerSpec.attention(f"{layer}.head{k}.a", enc.gat_dim))
    return specs


def gat_layer(
    tape: ComputationTape,
    params: Dict[str, int],
    features: int,
    index: np.ndarray,
    mask: np.ndarray,
    layer: str,
    heads: int,
    slope: float = 0.01
) -> int:
    """Uma camada GAT multi-cabeça sobre todos os nós do lote: nó (n, D_out)"""
    if index.shape[0] == 0 or not np.all(mask.any(axis=1)):
        raise ContractError("Vizinhança vazia na camada GAT")

    bias = tape.constant(np.where(mask, 0.0, ops.MASK_LOGIT))
    outputs = []
    for k in range(heads):
        w = params[f"{layer}.head{k}.W"]
        a = params[f"{layer}.head{k}.a"]
        projected = ops.dense_forward(tape, features, w)
        a_row = ops.reshape(tape, a, (1, -1))
        scores = ops.leaky_relu(tape, ops.dense_forward(tape, projected, a_row), slope)
        scores = ops.reshape(tape, scores, (-1,))
        logits = ops.add(tape, ops.take_rows(tape, scores, index), bias)
        alpha = ops.softmax(tape, logits)
        outputs.append(ops.attend(tape, alpha, ops.take_rows(tape, projected, index)))
    mean = ops.scale(tape, ops.add_n(tape, outputs), 1.0 / heads)
    return ops.tanh(tape, mean)


def encode_graph(
    tape: ComputationTape,
    params: Dict[str, int],
    batch: GraphBatch,
    config: RunConfig,
    features: Optional[int] = None
) -> int:
    """z = [g ‖ GAT2(GAT1(g))] para todos os nós do lote: nó (n, z_dim)"""
    enc = config.encoder
    g = encode_observations(tape, params, batch.observations, config) if features is None else features
    h1 = gat_layer(tape, params, g, batch.index, batch.mask, "gat1", enc.heads, enc.leaky_slope)
    h2 = gat_layer(tape, params, h1, batch.index, batch.mask, "gat2", enc.heads, enc.leaky_slope)
    return ops.concat(tape, [g, h2], axis=-1)


def encode_swarm(
    observations: List[LocalObservation],
    neighbors: NeighborSet,
    stores: Sequence[ParameterStore],
    config: RunConfig,
    dtype=np.float64
) -> np.ndarray:
    """z_m de cada UAV com os pesos locais de cada um (sem gradiente)

    g_j e a camada 1 do nó j usam os pesos de j; a camada 2 do nó m usa os
    pesos de m. Com um único store compartilhado basta uma passada.
    """
    enc = config.encoder
    width = config.environment.max_neighbors + 1
    batch = GraphBatch.single(observations, neighbors, width)

    if all(store is stores[0] for store in stores):
        tape = ComputationTape(dtype)
        return tape.value(encode_graph(tape, tape.bind(stores[0]), batch, config)).copy()

    count = len(observations)
    g_rows, h1_rows, z_rows = [], [], []
    tapes: List[Tuple[ComputationTape, Dict[str, int]]] = []
    for m in range(count):
        tape = ComputationTape(dtype)
        params = tape.bind(stores[m])
        tapes.append((tape, params))
        g = encode_observations(tape, params, [observations[m]], config)
        g_rows.append(tape.value(g)[0])
    g_all = np.stack(g_rows)

    for m, (tape, params) in enumerate(tapes):
        h1 = gat_layer(tape, params, tape.constant(g_all), batch.index, batch.mask, "gat1", enc.heads, enc.leaky_slope)
        h1_rows.append(tape.value(h1)[m])
    h1_all = np.stack(h1_rows)

    for m, (tape, params) in enumerate(tapes):
        h2 = gat_layer(tape, params, tape.constant(h1_all), batch.index, batch.mask, "gat2", enc.heads, enc.leaky_slope)
        z_rows.append(np.concatenate([g_all[m], tape.value(h2)[m]]))
    return np.stack(z_rows)
