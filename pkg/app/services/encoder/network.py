"""
Codificador por UAV: CNN sobre o mapa de visitas (2 canais) e MLP sobre o
vetor de status. g = [CNN(mapa) ‖ MLP(status)].
"""

from typing import Dict, List, Sequence

import numpy as np

from app.core.config import RunConfig
from app.models import LocalObservation
from app.services.encoder.observation import status_dim
from app.services.nn import ops
from app.services.nn.params import LayerSpec
from app.services.nn.tape import ComputationTape

MAP_CHANNELS = 2


def encoder_layer_spec(config: RunConfig) -> List[LayerSpec]:
    enc = config.encoder
    env = config.environment
    side = config.cnn_output_side
    c1, c2 = enc.cnn_channels
    k1, k2 = enc.cnn_kernels
    return [
        *LayerSpec.conv("enc.conv1", c1, MAP_CHANNELS, k1),
        *LayerSpec.conv("enc.conv2", c2, c1, k2),
        *LayerSpec.dense("enc.cnn_fc", enc.cnn_out, c2 * side * side),
        *LayerSpec.dense("enc.mlp1", enc.mlp_hidden, status_dim(env.max_neighbors, enc.max_obs_users)),
        *LayerSpec.dense("enc.mlp2", enc.mlp_hidden, enc.mlp_hidden),
    ]


def encode_observations(
    tape: ComputationTape,
    params: Dict[str, int],
    observations: Sequence[LocalObservation],
    config: RunConfig
) -> int:
    """Features g de um lote de observações: nó (B, D_g) na fita"""
    enc = config.encoder
    slope = enc.leaky_slope
    s1, s2 = enc.cnn_strides

    grids = tape.constant(np.stack([obs.grid for obs in observations]))
    status = tape.constant(np.stack([obs.status_vector() for obs in observations]))

    x = ops.conv2d_forward(tape, grids, params["enc.conv1.kernel"], stride=s1, bias=params["enc.conv1.bias"])
    x = ops.leaky_relu(tape, x, slope)
    x = ops.conv2d_forward(tape, x, params["enc.conv2.kernel"], stride=s2, bias=params["enc.conv2.bias"])
    x = ops.leaky_relu(tape, x, slope)
    x = ops.reshape(tape, x, (len(observations), -1))
    cnn = ops.leaky_relu(tape, ops.dense_forward(tape, x, params["enc.cnn_fc.weight"], params["enc.cnn_fc.bias"]), slope)

    h = ops.leaky_relu(tape, ops.dense_forward(tape, status, params["enc.mlp1.weight"], params["enc.mlp1.bias"]), slope)
    mlp = ops.leaky_relu(tape, ops.dense_forward(tape, h, params["enc.mlp2.weight"], params["enc.mlp2.bias"]), slope)

    return ops.concat(tape, [cnn, mlp], axis=-1)


def encode_observation(tape: ComputationTape, params: Dict[str, int], obs: LocalObservation, config: RunConfig) -> int:
    """Feature g de uma única observação: nó (D_g,)"""
    batch = encode_observations(tape, params, [obs], config)
    return ops.reshape(tape, batch, (config.encoder.feature_dim,))
