from .observation import build_observations, status_dim
from .network import encode_observation, encode_observations, encoder_layer_spec
from .gat import GraphBatch, encode_graph, encode_swarm, gat_layer, gat_layer_spec

__all__ = [
    "build_observations",
    "status_dim",
    "encode_observation",
    "encode_observations",
    "encoder_layer_spec",
    "GraphBatch",
    "encode_graph",
    "encode_swarm",
    "gat_layer",
    "gat_layer_spec",
]
