from typing import Dict, Iterable, Iterator, List, Optional, Tuple

import numpy as np

from app.core.exceptions import ConfigurationError, ShapeError


class LayerSpec:
    """Descrição de uma entrada do ParameterStore"""

    def __init__(
        self,
        name: str,
        shape: Tuple[int, ...],
        init: str = "xavier",
        fan_in: Optional[int] = None,
        fan_out: Optional[int] = None,
        value: float = 0.0
    ):
        self.name = name
        self.shape = tuple(int(d) for d in shape)
        self.init = init
        self.fan_in = fan_in
        self.fan_out = fan_out
        self.value = value

    @classmethod
    def dense(cls, prefix: str, out_dim: int, in_dim: int) -> List["LayerSpec"]:
        return [
            cls(f"{prefix}.weight", (out_dim, in_dim), fan_in=in_dim, fan_out=out_dim),
            cls(f"{prefix}.bias", (out_dim,), init="zeros"),
        ]

    @classmethod
    def conv(cls, prefix: str, out_channels: int, in_channels: int, kernel: int) -> List["LayerSpec"]:
        return [
            cls(
                f"{prefix}.kernel",
                (out_channels, in_channels, kernel, kernel),
                fan_in=in_channels * kernel * kernel,
                fan_out=out_channels * kernel * kernel
            ),
            cls(f"{prefix}.bias", (out_channels,), init="zeros"),
        ]

    @classmethod
    def attention(cls, name: str, dim: int) -> "LayerSpec":
        return cls(name, (dim,), fan_in=dim, fan_out=1)

    def to_dict(self) -> Dict:
        return {"name": self.name, "shape": list(self.shape), "init": self.init}


class ParameterStore:
    """Coleção nomeada de arrays reais com versão monotônica"""

    def __init__(self, entries: Dict[str, np.ndarray], version: int = 0):
        self.entries = dict(entries)
        self.version = int(version)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def names(self) -> List[str]:
        return list(self.entries)

    def items(self) -> Iterator[Tuple[str, np.ndarray]]:
        return iter(self.entries.items())

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {name: array.shape for name, array in self.entries.items()}

    def copy(self) -> "ParameterStore":
        return ParameterStore({name: array.copy() for name, array in self.entries.items()}, self.version)

    def num_values(self) -> int:
        return int(sum(array.size for array in self.entries.values()))

    def check_compatible(self, other: "ParameterStore"):
        """Mesmos nomes e shapes; ShapeError com o diagnóstico caso contrário"""
        mine, theirs = self.shapes(), other.shapes()
        if mine.keys() != theirs.keys():
            missing = sorted(set(mine) ^ set(theirs))
            raise ShapeError(f"Conjuntos de parâmetros diferentes: {missing[:5]}")
        for name, shape in mine.items():
            if theirs[name] != shape:
                raise ShapeError(f"Dimensão de {name}: {shape} != {theirs[name]}")

    def allclose(self, other: "ParameterStore", atol: float = 0.0) -> bool:
        if self.shapes() != other.shapes():
            return False
        return all(np.allclose(self[n], other[n], rtol=0.0, atol=atol) for n in self.names())

    def to_dict(self) -> Dict:
        return {"version": self.version, "entries": {n: list(a.shape) for n, a in self.entries.items()}}


def init_parameters(spec: Iterable[LayerSpec], seed: int, dtype=np.float64) -> ParameterStore:
    """Inicialização determinística: uniforme de Glorot para pesos, zero para vieses"""
    rng = np.random.default_rng(int(seed) % 2**64)
    entries: Dict[str, np.ndarray] = {}
    for layer in spec:
        if not layer.shape or any(d <= 0 for d in layer.shape):
            raise ConfigurationError(f"Camada {layer.name} com dimensão inválida {layer.shape}")
        if layer.name in entries:
            raise ConfigurationError(f"Camada duplicada: {layer.name}")
        if layer.init == "zeros":
            array = np.zeros(layer.shape)
        elif layer.init == "constant":
            array = np.full(layer.shape, float(layer.value))
        elif layer.init == "xavier":
            fan_in = layer.fan_in or layer.shape[-1]
            fan_out = layer.fan_out or layer.shape[0]
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            array = rng.uniform(-limit, limit, size=layer.shape)
        else:
            raise ConfigurationError(f"Esquema de inicialização desconhecido: {layer.init}")
        entries[layer.name] = array.astype(dtype)
    return ParameterStore(entries, version=0)
