from .policy import (
    ActionDistribution,
    PolicyHeads,
    act,
    init_model,
    model_layer_spec,
    policy_forward,
    sample_action,
    value_forward,
)
from .buffer import ReplayBuffer
from .gae import compute_gae, normalize_advantages
from .learner import clipped_surrogate, learner_round, new_adam_state, ppo_update
from .normalizer import ReturnScaler

__all__ = [
    "ActionDistribution",
    "PolicyHeads",
    "act",
    "init_model",
    "model_layer_spec",
    "policy_forward",
    "sample_action",
    "value_forward",
    "ReplayBuffer",
    "compute_gae",
    "normalize_advantages",
    "clipped_surrogate",
    "learner_round",
    "new_adam_state",
    "ppo_update",
    "ReturnScaler",
]
