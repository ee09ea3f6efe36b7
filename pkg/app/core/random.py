from typing import Dict, Tuple

import numpy as np

# Ordem fixa: acrescentar um fluxo novo no final não desloca os existentes
STREAM_NAMES = ("placement", "mobility", "tasks", "init", "policy", "shuffle")


def make_streams(seed: int, key: Tuple[int, ...] = ()) -> Dict[str, np.random.Generator]:
    """Divide a semente mestre em fluxos independentes por subsistema"""
    root = np.random.SeedSequence(entropy=int(seed) % 2**64, spawn_key=tuple(key))
    children = root.spawn(len(STREAM_NAMES))
    return {name: np.random.default_rng(child) for name, child in zip(STREAM_NAMES, children)}


def derive_seed(seed: int, *key: int) -> int:
    """Semente inteira derivada (para inicialização de parâmetros)"""
    sequence = np.random.SeedSequence(entropy=int(seed) % 2**64, spawn_key=tuple(key))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def stream_seed(seed: int, name: str) -> int:
    """Semente inteira do fluxo `name` (mesma raiz de make_streams)"""
    return derive_seed(seed, STREAM_NAMES.index(name))
