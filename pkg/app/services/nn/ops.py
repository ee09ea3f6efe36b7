"""
Primitivas diferenciáveis sobre a ComputationTape.

Cada primitiva registra um forward e um backward puros; as funções públicas
recebem a fita e ids de nós e devolvem o id do nó produzido.
"""

from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from app.core.exceptions import ShapeError
from app.services.nn.tape import ComputationTape, register_op

# "−∞" das posições mascaradas: exp() zera exatamente e a entropia continua finita
MASK_LOGIT = -1e9


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """Reduz um gradiente broadcast de volta ao shape da entrada"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------- dense

def _dense_backward(g, values, out, saved, attrs):
    x, w = values[0], values[1]
    if x.ndim == 1:
        grads = [g @ w, np.outer(g, x)]
    else:
        grads = [g @ w, g.T @ x]
    if len(values) == 3:
        grads.append(g if g.ndim == 1 else g.sum(axis=0))
    return grads


@register_op("dense", _dense_backward)
def _dense_forward(values, attrs):
    x, w = values[0], values[1]
    if w.ndim != 2 or x.ndim not in (1, 2) or x.shape[-1] != w.shape[1]:
        raise ShapeError(f"dense: x {x.shape} incompatível com W {w.shape}")
    y = x @ w.T
    if len(values) == 3:
        b = values[2]
        if b.shape != (w.shape[0],):
            raise ShapeError(f"dense: b {b.shape} incompatível com W {w.shape}")
        y = y + b
    return y, None


def dense_forward(tape: ComputationTape, x: int, w: int, b: Optional[int] = None) -> int:
    """y = W·x + b (x pode ser um vetor ou um lote de linhas)"""
    inputs = (x, w) if b is None else (x, w, b)
    return tape.record("dense", inputs)


# ---------------------------------------------------------------- conv2d

def _conv_windows(x4: np.ndarray, k: int, stride: int) -> np.ndarray:
    windows = sliding_window_view(x4, (k, k), axis=(2, 3))
    return windows[:, :, ::stride, ::stride]


def _conv2d_backward(g, values, out, saved, attrs):
    img, kernels = values[0], values[1]
    stride = attrs["stride"]
    x4 = img if img.ndim == 4 else img[None]
    g4 = g if g.ndim == 4 else g[None]
    windows = saved
    _, _, oh, ow = g4.shape
    k = kernels.shape[-1]

    grad_kernels = np.einsum("noxy,ncxyij->ocij", g4, windows)
    grad_img = np.zeros_like(x4)
    for i in range(k):
        for j in range(k):
            grad_img[:, :, i:i + stride * oh:stride, j:j + stride * ow:stride] += np.einsum(
                "noxy,oc->ncxy", g4, kernels[:, :, i, j]
            )
    grads = [grad_img if img.ndim == 4 else grad_img[0], grad_kernels]
    if len(values) == 3:
        grads.append(g4.sum(axis=(0, 2, 3)))
    return grads


@register_op("conv2d", _conv2d_backward)
def _conv2d_forward(values, attrs):
    img, kernels = values[0], values[1]
    stride = attrs["stride"]
    if img.ndim not in (3, 4) or kernels.ndim != 4:
        raise ShapeError(f"conv2d: imagem {img.shape} ou kernels {kernels.shape} malformados")
    x4 = img if img.ndim == 4 else img[None]
    _, c, h, w = x4.shape
    out_channels, kc, k, k2 = kernels.shape
    if kc != c or k != k2:
        raise ShapeError(f"conv2d: kernels {kernels.shape} incompatíveis com {c} canais")
    if k > h or k > w:
        raise ShapeError(f"conv2d: kernel {k}x{k} maior que a imagem {h}x{w}")
    if stride < 1:
        raise ShapeError(f"conv2d: stride {stride} < 1")

    windows = _conv_windows(x4, k, stride)
    out = np.einsum("ncxyij,ocij->noxy", windows, kernels)
    if len(values) == 3:
        out = out + values[2][None, :, None, None]
    return (out if img.ndim == 4 else out[0]), windows


def conv2d_forward(tape: ComputationTape, img: int, kernels: int, stride: int = 1, bias: Optional[int] = None) -> int:
    """Correlação cruzada válida (sem padding); saída floor((h-k)/stride)+1"""
    inputs = (img, kernels) if bias is None else (img, kernels, bias)
    return tape.record("conv2d", inputs, stride=int(stride))


# ---------------------------------------------------------------- ativações

@register_op("leaky_relu", lambda g, v, out, s, a: [g * np.where(v[0] >= 0, 1.0, a["slope"])])
def _leaky_relu_forward(values, attrs):
    x = values[0]
    return np.where(x >= 0, x, attrs["slope"] * x), None


def leaky_relu(tape: ComputationTape, x: int, slope: float = 0.01) -> int:
    """max(x, slope·x) elemento a elemento"""
    return tape.record("leaky_relu", (x,), slope=float(slope))


@register_op("tanh", lambda g, v, out, s, a: [g * (1.0 - out * out)])
def _tanh_forward(values, attrs):
    return np.tanh(values[0]), None


def tanh(tape: ComputationTape, x: int) -> int:
    return tape.record("tanh", (x,))


def _softmax_values(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


@register_op("softmax", lambda g, v, out, s, a: [out * (g - (g * out).sum(axis=-1, keepdims=True))])
def _softmax_forward(values, attrs):
    if values[0].shape[-1] < 1:
        raise ShapeError("softmax de vetor vazio")
    return _softmax_values(values[0]), None


def softmax(tape: ComputationTape, x: int) -> int:
    """Softmax no último eixo, com subtração do máximo"""
    return tape.record("softmax", (x,))


@register_op("log_softmax", lambda g, v, out, s, a: [g - np.exp(out) * g.sum(axis=-1, keepdims=True)])
def _log_softmax_forward(values, attrs):
    x = values[0]
    shifted = x - x.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True)), None


def log_softmax(tape: ComputationTape, x: int) -> int:
    return tape.record("log_softmax", (x,))


# ---------------------------------------------------------------- aritmética

@register_op("add", lambda g, v, out, s, a: [_unbroadcast(g, v[0].shape), _unbroadcast(g, v[1].shape)])
def _add_forward(values, attrs):
    return values[0] + values[1], None


@register_op("sub", lambda g, v, out, s, a: [_unbroadcast(g, v[0].shape), _unbroadcast(-g, v[1].shape)])
def _sub_forward(values, attrs):
    return values[0] - values[1], None


@register_op("mul", lambda g, v, out, s, a: [_unbroadcast(g * v[1], v[0].shape), _unbroadcast(g * v[0], v[1].shape)])
def _mul_forward(values, attrs):
    return values[0] * values[1], None


@register_op("scale", lambda g, v, out, s, a: [g * a["factor"]])
def _scale_forward(values, attrs):
    return values[0] * attrs["factor"], None


@register_op("exp", lambda g, v, out, s, a: [g * out])
def _exp_forward(values, attrs):
    return np.exp(values[0]), None


@register_op("square", lambda g, v, out, s, a: [2.0 * g * v[0]])
def _square_forward(values, attrs):
    return values[0] * values[0], None


def add(tape: ComputationTape, a: int, b: int) -> int:
    return tape.record("add", (a, b))


def sub(tape: ComputationTape, a: int, b: int) -> int:
    return tape.record("sub", (a, b))


def mul(tape: ComputationTape, a: int, b: int) -> int:
    return tape.record("mul", (a, b))


def scale(tape: ComputationTape, x: int, factor: float) -> int:
    return tape.record("scale", (x,), factor=float(factor))


def exp(tape: ComputationTape, x: int) -> int:
    return tape.record("exp", (x,))


def square(tape: ComputationTape, x: int) -> int:
    return tape.record("square", (x,))


def add_n(tape: ComputationTape, ids: Sequence[int]) -> int:
    total = ids[0]
    for node in ids[1:]:
        total = add(tape, total, node)
    return total


# ---------------------------------------------------------------- reduções

def _reduce_backward(g, values, out, saved, attrs):
    shape = values[0].shape
    axis = attrs["axis"]
    if axis is not None and not attrs["keepdims"]:
        g = np.expand_dims(g, axis)
    g = np.broadcast_to(g, shape)
    if attrs["mean"]:
        count = values[0].size if axis is None else shape[axis]
        g = g / count
    return [np.array(g, copy=True)]


@register_op("reduce", _reduce_backward)
def _reduce_forward(values, attrs):
    x = values[0]
    fn = np.mean if attrs["mean"] else np.sum
    return np.asarray(fn(x, axis=attrs["axis"], keepdims=attrs["keepdims"])), None


def sum_all(tape: ComputationTape, x: int, axis: Optional[int] = None, keepdims: bool = False) -> int:
    return tape.record("reduce", (x,), axis=axis, keepdims=keepdims, mean=False)


def mean_all(tape: ComputationTape, x: int, axis: Optional[int] = None, keepdims: bool = False) -> int:
    return tape.record("reduce", (x,), axis=axis, keepdims=keepdims, mean=True)


# ---------------------------------------------------------------- forma e indexação

def _concat_backward(g, values, out, saved, attrs):
    sizes = [v.shape[attrs["axis"]] for v in values]
    return np.split(g, np.cumsum(sizes)[:-1], axis=attrs["axis"])


@register_op("concat", _concat_backward)
def _concat_forward(values, attrs):
    try:
        return np.concatenate(values, axis=attrs["axis"]), None
    except ValueError as e:
        raise ShapeError(f"concat: {e}") from e


def concat(tape: ComputationTape, ids: Sequence[int], axis: int = -1) -> int:
    return tape.record("concat", tuple(ids), axis=axis)


@register_op("reshape", lambda g, v, out, s, a: [g.reshape(v[0].shape)])
def _reshape_forward(values, attrs):
    try:
        return values[0].reshape(attrs["shape"]), None
    except ValueError as e:
        raise ShapeError(f"reshape: {e}") from e


def reshape(tape: ComputationTape, x: int, shape) -> int:
    return tape.record("reshape", (x,), shape=tuple(shape))


def _take_rows_backward(g, values, out, saved, attrs):
    grad = np.zeros_like(values[0])
    np.add.at(grad, attrs["index"], g)
    return [grad]


@register_op("take_rows", _take_rows_backward)
def _take_rows_forward(values, attrs):
    return np.take(values[0], attrs["index"], axis=0), None


def take_rows(tape: ComputationTape, x: int, index) -> int:
    """x[index] no primeiro eixo; `index` pode ter qualquer forma"""
    return tape.record("take_rows", (x,), index=np.asarray(index, dtype=np.int64))


def _pick_backward(g, values, out, saved, attrs):
    grad = np.zeros_like(values[0])
    grad[np.arange(len(attrs["index"])), attrs["index"]] = g
    return [grad]


@register_op("pick", _pick_backward)
def _pick_forward(values, attrs):
    index = attrs["index"]
    return values[0][np.arange(len(index)), index], None


def pick(tape: ComputationTape, x: int, index) -> int:
    """x[b, index[b]] para cada linha b"""
    return tape.record("pick", (x,), index=np.asarray(index, dtype=np.int64))


def _attend_backward(g, values, out, saved, attrs):
    alpha, v = values
    return [np.einsum("nd,nkd->nk", g, v), alpha[:, :, None] * g[:, None, :]]


@register_op("attend", _attend_backward)
def _attend_forward(values, attrs):
    alpha, v = values
    if alpha.shape != v.shape[:2]:
        raise ShapeError(f"attend: pesos {alpha.shape} incompatíveis com valores {v.shape}")
    return np.einsum("nk,nkd->nd", alpha, v), None


def attend(tape: ComputationTape, alpha: int, values: int) -> int:
    """Soma ponderada por linha: out[n] = Σ_k alpha[n,k]·values[n,k]"""
    return tape.record("attend", (alpha, values))


def _minimum_backward(g, values, out, saved, attrs):
    first = values[0] <= values[1]
    return [_unbroadcast(np.where(first, g, 0.0), values[0].shape), _unbroadcast(np.where(first, 0.0, g), values[1].shape)]


@register_op("minimum", _minimum_backward)
def _minimum_forward(values, attrs):
    return np.minimum(values[0], values[1]), None


def minimum(tape: ComputationTape, a: int, b: int) -> int:
    return tape.record("minimum", (a, b))


@register_op("clip", lambda g, v, out, s, a: [g * ((v[0] > a["low"]) & (v[0] < a["high"]))])
def _clip_forward(values, attrs):
    return np.clip(values[0], attrs["low"], attrs["high"]), None


def clip(tape: ComputationTape, x: int, low: float, high: float) -> int:
    """Recorte; o gradiente é zero fora do intervalo aberto"""
    return tape.record("clip", (x,), low=float(low), high=float(high))
