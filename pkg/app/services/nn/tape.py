from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions import ContractError

ForwardFn = Callable[[List[np.ndarray], Dict[str, Any]], Tuple[np.ndarray, Any]]
BackwardFn = Callable[[np.ndarray, List[np.ndarray], np.ndarray, Any, Dict[str, Any]], Sequence[Optional[np.ndarray]]]


class Op:
    """Primitiva diferenciável: forward e backward puros"""

    def __init__(self, name: str, forward: ForwardFn, backward: BackwardFn):
        self.name = name
        self.forward = forward
        self.backward = backward


OPS: Dict[str, Op] = {}


def register_op(name: str, backward: BackwardFn):
    """Decorator que registra o forward de uma primitiva junto do seu backward"""

    def decorator(forward: ForwardFn) -> ForwardFn:
        OPS[name] = Op(name, forward, backward)
        return forward

    return decorator


class TapeNode:
    """Registro de uma operação na fita"""

    __slots__ = ("op", "inputs", "attrs", "value", "saved", "name", "requires_grad")

    def __init__(
        self,
        op: str,
        inputs: Tuple[int, ...],
        attrs: Dict[str, Any],
        value: np.ndarray,
        saved: Any = None,
        name: Optional[str] = None,
        requires_grad: bool = False
    ):
        self.op = op
        self.inputs = inputs
        self.attrs = attrs
        self.value = value
        self.saved = saved
        self.name = name
        self.requires_grad = requires_grad


class ComputationTape:
    """Fita de operações em ordem topológica (cada entrada precede o consumidor)"""

    def __init__(self, dtype=np.float64):
        self.dtype = np.dtype(dtype)
        self.nodes: List[TapeNode] = []
        self.params: Dict[str, int] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    def value(self, node_id: int) -> np.ndarray:
        return self.nodes[node_id].value

    def constant(self, value) -> int:
        """Folha sem gradiente (observações, máscaras, alvos)"""
        array = np.asarray(value, dtype=self.dtype)
        self.nodes.append(TapeNode("leaf", (), {}, array))
        return len(self.nodes) - 1

    def param(self, name: str, value: np.ndarray) -> int:
        """Folha treinável identificada pelo nome"""
        if name in self.params:
            raise ContractError(f"Parâmetro registrado duas vezes na fita: {name}")
        array = np.asarray(value, dtype=self.dtype)
        self.nodes.append(TapeNode("leaf", (), {}, array, name=name, requires_grad=True))
        self.params[name] = len(self.nodes) - 1
        return self.params[name]

    def bind(self, store, prefix: str = "") -> Dict[str, int]:
        """Registra todas as entradas de um ParameterStore e devolve nome -> id"""
        return {name: self.param(prefix + name, array) for name, array in store.items()}

    def record(self, op: str, inputs: Sequence[int], **attrs) -> int:
        """Executa a primitiva `op` e anexa o resultado à fita"""
        inputs = tuple(int(i) for i in inputs)
        for i in inputs:
            if i < 0 or i >= len(self.nodes):
                raise ContractError(f"Entrada {i} inexistente na fita ({op})")
        values = [self.nodes[i].value for i in inputs]
        value, saved = OPS[op].forward(values, attrs)
        requires_grad = any(self.nodes[i].requires_grad for i in inputs)
        self.nodes.append(TapeNode(op, inputs, attrs, value, saved, requires_grad=requires_grad))
        return len(self.nodes) - 1

    def replay(self, leaf_values: Optional[Dict[int, np.ndarray]] = None) -> List[np.ndarray]:
        """Reexecuta a fita; `leaf_values` substitui folhas por id"""
        leaf_values = leaf_values or {}
        values: List[np.ndarray] = []
        for node_id, node in enumerate(self.nodes):
            if node.op == "leaf":
                values.append(np.asarray(leaf_values.get(node_id, node.value), dtype=self.dtype))
                continue
            value, _ = OPS[node.op].forward([values[i] for i in node.inputs], node.attrs)
            values.append(value)
        return values


def backward(tape: ComputationTape, loss_id: int) -> Dict[str, np.ndarray]:
    """Gradientes reverse-mode da perda escalar para cada parâmetro da fita"""

    loss = tape.nodes[loss_id].value
    if np.size(loss) != 1:
        raise ContractError(f"A perda precisa ser escalar, shape recebido {np.shape(loss)}")

    grads: List[Optional[np.ndarray]] = [None] * (loss_id + 1)
    grads[loss_id] = np.ones_like(loss)

    for node_id in range(loss_id, -1, -1):
        grad = grads[node_id]
        node = tape.nodes[node_id]
        if grad is None or node.op == "leaf" or not node.requires_grad:
            continue
        values = [tape.nodes[i].value for i in node.inputs]
        input_grads = OPS[node.op].backward(grad, values, node.value, node.saved, node.attrs)
        for i, g in zip(node.inputs, input_grads):
            if g is None or not tape.nodes[i].requires_grad:
                continue
            # Acumulação: subgrafos compartilhados somam contribuições
            grads[i] = g if grads[i] is None else grads[i] + g
        grads[node_id] = None

    result = {}
    for name, node_id in tape.params.items():
        g = grads[node_id] if node_id <= loss_id else None
        result[name] = np.zeros_like(tape.nodes[node_id].value) if g is None else g
    return result
