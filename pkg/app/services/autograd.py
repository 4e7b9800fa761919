"""
Diferenciación automática en modo reverso sobre arrays de numpy

Un Tape registra los nodos en orden de creación; backward los recorre en orden
inverso una sola vez. Las funciones de este módulo aceptan números, arrays o Var,
de modo que el mismo código de pérdida sirve para evaluar y para entrenar.
"""
import copy
import logging
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from app.errors import CheckpointError, ContractViolation
from app.schemas.training_schemas import AdamConfig

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


class Var:
    """Nodo del tape: valor calculado, padres y la vjp hacia cada padre"""

    __array_ufunc__ = None
    __slots__ = ("tape", "value", "parents", "vjps", "name")

    def __init__(self, tape: "Tape", value, parents: Sequence["Var"] = (), vjps: Sequence[Callable] = (),
                 name: Optional[str] = None):
        self.tape = tape
        self.value = np.asarray(value, dtype=float)
        self.parents = tuple(parents)
        self.vjps = tuple(vjps)
        self.name = name
        tape.nodes.append(self)

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def item(self) -> float:
        return float(self.value)

    def __repr__(self) -> str:
        return f"Var(name={self.name}, shape={self.shape})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, negative(other))

    def __rsub__(self, other):
        return add(other, negative(self))

    def __mul__(self, other):
        return multiply(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return divide(self, other)

    def __rtruediv__(self, other):
        return divide(other, self)

    def __neg__(self):
        return negative(self)

    def __pow__(self, k):
        return power(self, k)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, idx):
        return take(self, idx)


class Tape:
    """Lista de nodos en orden de inserción, acíclica por construcción"""

    def __init__(self):
        self.nodes: List[Var] = []
        # Máscaras de las bisagras (max/abs) evaluadas, en orden
        self.kinks: List[np.ndarray] = []

    def variable(self, value, name: Optional[str] = None) -> Var:
        return Var(self, np.array(value, dtype=float), name=name)

    def kink_signature(self) -> bytes:
        if not self.kinks:
            return b""
        return np.concatenate([np.ravel(k) for k in self.kinks]).tobytes()

    def backward(self, root) -> Dict[str, np.ndarray]:
        """
        Gradiente de root respecto de cada hoja con nombre

        Raises:
            ContractViolation: si root no es escalar
        """
        hojas = [n for n in self.nodes if n.name is not None]
        if not isinstance(root, Var):
            if np.ndim(root) != 0:
                raise ContractViolation(f"backward requiere una raíz escalar, forma {np.shape(root)}")
            return {h.name: np.zeros_like(h.value) for h in hojas}
        if root.value.size != 1:
            raise ContractViolation(f"backward requiere una raíz escalar, forma {root.shape}")

        grads: Dict[int, np.ndarray] = {id(root): np.ones_like(root.value)}
        for node in reversed(self.nodes):
            g = grads.pop(id(node), None) if node.name is None else grads.get(id(node))
            if g is None:
                continue
            for parent, vjp in zip(node.parents, node.vjps):
                contrib = _unbroadcast(vjp(g), parent.value.shape)
                previo = grads.get(id(parent))
                grads[id(parent)] = contrib if previo is None else previo + contrib

        return {h.name: grads.get(id(h), np.zeros_like(h.value)) for h in hojas}


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


def _tape_of(*args) -> Optional[Tape]:
    for a in args:
        if isinstance(a, Var):
            return a.tape
    return None


def value_of(x):
    """Valor numérico sin registro en el tape"""
    return x.value if isinstance(x, Var) else x


def _node(tape: Tape, value, inputs: Sequence, vjps: Sequence[Callable]) -> Var:
    parents, funcs = [], []
    for x, f in zip(inputs, vjps):
        if isinstance(x, Var):
            parents.append(x)
            funcs.append(f)
    return Var(tape, value, parents, funcs)


def add(a, b):
    tape = _tape_of(a, b)
    if tape is None:
        return a + b
    return _node(tape, value_of(a) + value_of(b), (a, b), (lambda g: g, lambda g: g))


def negative(a):
    if not isinstance(a, Var):
        return -a
    return _node(a.tape, -a.value, (a,), (lambda g: -g,))


def multiply(a, b):
    tape = _tape_of(a, b)
    if tape is None:
        return a * b
    va, vb = value_of(a), value_of(b)
    return _node(tape, va * vb, (a, b), (lambda g: g * vb, lambda g: g * va))


def divide(a, b):
    tape = _tape_of(a, b)
    if tape is None:
        return a / b
    va, vb = value_of(a), value_of(b)
    return _node(tape, va / vb, (a, b), (lambda g: g / vb, lambda g: -g * va / (vb * vb)))


def power(a, k: float):
    if not isinstance(a, Var):
        return a ** k
    va = a.value
    return _node(a.tape, va ** k, (a,), (lambda g: g * k * va ** (k - 1),))


def maximum(a, b):
    """max(a, b); en el empate el gradiente va al primer argumento"""
    va, vb = value_of(a), value_of(b)
    mask = np.asarray(va >= vb)
    tape = _tape_of(a, b)
    if tape is None:
        return np.maximum(va, vb)
    tape.kinks.append(mask)
    return _node(tape, np.maximum(va, vb), (a, b), (lambda g: g * mask, lambda g: g * ~mask))


def absolute(a):
    """|a| con sign(0) = +1"""
    if not isinstance(a, Var):
        return np.abs(a)
    signo = np.where(a.value >= 0, 1.0, -1.0)
    a.tape.kinks.append(a.value >= 0)
    return _node(a.tape, np.abs(a.value), (a,), (lambda g: g * signo,))


def exp(a):
    if not isinstance(a, Var):
        return np.exp(a)
    out = np.exp(a.value)
    return _node(a.tape, out, (a,), (lambda g: g * out,))


def log(a):
    if not isinstance(a, Var):
        return np.log(a)
    va = a.value
    return _node(a.tape, np.log(va), (a,), (lambda g: g / va,))


def tanh(a):
    if not isinstance(a, Var):
        return np.tanh(a)
    out = np.tanh(a.value)
    return _node(a.tape, out, (a,), (lambda g: g * (1.0 - out * out),))


def _sigmoid(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def sigmoid(a):
    if not isinstance(a, Var):
        return _sigmoid(a)
    out = _sigmoid(a.value)
    return _node(a.tape, out, (a,), (lambda g: g * out * (1.0 - out),))


def _matmul_vjp_a(g, va, vb):
    if vb.ndim == 1:
        return np.multiply.outer(g, vb)
    if va.ndim == 1:
        return vb @ g
    return g @ np.swapaxes(vb, -1, -2)


def _matmul_vjp_b(g, va, vb):
    if vb.ndim == 1:
        if va.ndim == 1:
            return g * va
        return va.reshape(-1, va.shape[-1]).T @ np.ravel(g)
    if va.ndim == 1:
        return np.outer(va, g)
    return va.reshape(-1, va.shape[-1]).T @ g.reshape(-1, g.shape[-1])


def matmul(a, b):
    tape = _tape_of(a, b)
    va, vb = value_of(a), value_of(b)
    if tape is None:
        return va @ vb
    va, vb = np.asarray(va, dtype=float), np.asarray(vb, dtype=float)
    return _node(tape, va @ vb, (a, b), (lambda g: _matmul_vjp_a(g, va, vb), lambda g: _matmul_vjp_b(g, va, vb)))


dot = matmul


def total(a, axis=None, keepdims: bool = False):
    """Suma sobre un eje (o sobre todo el array)"""
    if not isinstance(a, Var):
        return np.sum(a, axis=axis, keepdims=keepdims)
    shape = a.shape

    def vjp(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return np.broadcast_to(g, shape)

    return _node(a.tape, np.sum(a.value, axis=axis, keepdims=keepdims), (a,), (vjp,))


def take(a, idx):
    if not isinstance(a, Var):
        return a[idx]
    shape = a.shape
    claves = idx if isinstance(idx, tuple) else (idx,)
    basico = all(isinstance(k, (int, np.integer, slice)) for k in claves)

    def vjp(g):
        out = np.zeros(shape)
        if basico:
            out[idx] = g
        else:
            np.add.at(out, idx, g)
        return out

    return _node(a.tape, a.value[idx], (a,), (vjp,))


def reshape(a, shape):
    if not isinstance(a, Var):
        return np.reshape(a, shape)
    original = a.shape
    return _node(a.tape, a.value.reshape(shape), (a,), (lambda g: np.reshape(g, original),))


def concat(items: Sequence, axis: int = 0):
    tape = _tape_of(*items)
    valores = [np.asarray(value_of(x), dtype=float) for x in items]
    out = np.concatenate(valores, axis=axis)
    if tape is None:
        return out
    cortes = np.cumsum([v.shape[axis] for v in valores])[:-1]

    def parte(k):
        return lambda g: np.split(g, cortes, axis=axis)[k]

    return _node(tape, out, items, [parte(k) for k in range(len(items))])


def stack(items: Sequence, axis: int = 0):
    tape = _tape_of(*items)
    valores = [np.asarray(value_of(x), dtype=float) for x in items]
    out = np.stack(valores, axis=axis)
    if tape is None:
        return out

    def parte(k):
        return lambda g: np.take(g, k, axis=axis)

    return _node(tape, out, items, [parte(k) for k in range(len(items))])


def affine(x, w, b):
    return add(matmul(x, w), b)


class ParamStore:
    """Tensores con nombre y el estado de Adam asociado"""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.tensors: Dict[str, np.ndarray] = {}
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}
        self.step = 0

    def add(self, name: str, value) -> np.ndarray:
        arr = np.array(value, dtype=float)
        self.tensors[name] = arr
        self.m[name] = np.zeros_like(arr)
        self.v[name] = np.zeros_like(arr)
        return arr

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self.tensors

    def names(self) -> List[str]:
        return list(self.tensors)

    def bind(self, tape: Tape) -> Dict[str, Var]:
        """Registrar cada tensor como hoja del tape"""
        return {name: Var(tape, value, name=name) for name, value in self.tensors.items()}

    def snapshot(self) -> Dict[str, Any]:
        return copy.deepcopy({"tensors": self.tensors, "m": self.m, "v": self.v, "step": self.step})

    def restore(self, snapshot: Dict[str, Any]) -> None:
        snap = copy.deepcopy(snapshot)
        self.tensors, self.m, self.v, self.step = snap["tensors"], snap["m"], snap["v"], snap["step"]

    def to_checkpoint(self) -> Dict[str, Any]:
        def tensor(arr):
            return {"shape": list(arr.shape), "values": arr.ravel().tolist()}

        return {
            "version": CHECKPOINT_VERSION,
            "seed": self.seed,
            "step": self.step,
            "tensors": {n: tensor(a) for n, a in self.tensors.items()},
            "adam": {n: {"m": tensor(self.m[n]), "v": tensor(self.v[n])} for n in self.tensors},
        }

    def load_checkpoint(self, data: Dict[str, Any]) -> None:
        """
        Cargar valores sobre los tensores ya declarados

        Raises:
            CheckpointError: versión distinta, tensores faltantes o formas incompatibles
        """
        if data.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(f"Versión de checkpoint no soportada: {data.get('version')}")

        def leer(nombre, entrada, esperado):
            shape = tuple(entrada["shape"])
            if shape != esperado:
                raise CheckpointError(f"Forma incompatible para '{nombre}': {shape} en archivo, {esperado} esperado")
            return np.array(entrada["values"], dtype=float).reshape(shape)

        faltantes = set(self.tensors) ^ set(data["tensors"])
        if faltantes:
            raise CheckpointError(f"Tensores que no coinciden con el modelo: {sorted(faltantes)}")

        for name, arr in self.tensors.items():
            self.tensors[name] = leer(name, data["tensors"][name], arr.shape)
            adam = data.get("adam", {}).get(name)
            if adam is not None:
                self.m[name] = leer(name, adam["m"], arr.shape)
                self.v[name] = leer(name, adam["v"], arr.shape)
        self.step = int(data.get("step", 0))
        self.seed = data.get("seed", self.seed)


def adam_step(store: ParamStore, grads: Dict[str, np.ndarray], cfg: AdamConfig) -> ParamStore:
    """
    Actualización de Adam con corrección de sesgo, en el lugar

    Raises:
        ContractViolation: si las claves o las formas no coinciden con el store
    """
    if set(grads) != set(store.tensors):
        raise ContractViolation(
            f"Gradientes con claves distintas al store: {sorted(set(grads) ^ set(store.tensors))}"
        )
    for name, g in grads.items():
        if np.shape(g) != store.tensors[name].shape:
            raise ContractViolation(
                f"Gradiente de '{name}' con forma {np.shape(g)}, se esperaba {store.tensors[name].shape}"
            )

    store.step += 1
    t = store.step
    for name, g in grads.items():
        store.m[name] = cfg.beta1 * store.m[name] + (1.0 - cfg.beta1) * g
        store.v[name] = cfg.beta2 * store.v[name] + (1.0 - cfg.beta2) * g * g
        m_hat = store.m[name] / (1.0 - cfg.beta1 ** t)
        v_hat = store.v[name] / (1.0 - cfg.beta2 ** t)
        store.tensors[name] = store.tensors[name] - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps)
    return store


def finite_diff_check(f: Callable[[Dict[str, Any]], Any], store: ParamStore,
                      h: float = 1e-5, tol: float = 1e-4) -> float:
    """
    Comparar gradientes de backward con diferencias centrales

    f recibe el diccionario de parámetros ligados a un tape y devuelve un escalar.
    Se omiten las coordenadas en las que alguna bisagra cambia de lado dentro de 10*h.

    Returns:
        Máximo error relativo sobre las coordenadas verificadas
    """
    tape = Tape()
    out = f(store.bind(tape))
    analitico = tape.backward(out)
    firma = tape.kink_signature()

    def evaluar(name, idx, delta):
        original = store.tensors[name][idx]
        store.tensors[name][idx] = original + delta
        try:
            t = Tape()
            valor = float(value_of(f(store.bind(t))))
            return valor, t.kink_signature()
        finally:
            store.tensors[name][idx] = original

    peor = 0.0
    omitidas = 0
    for name, arr in store.tensors.items():
        for idx in np.ndindex(arr.shape):
            if evaluar(name, idx, 10 * h)[1] != firma or evaluar(name, idx, -10 * h)[1] != firma:
                omitidas += 1
                continue
            numerico = (evaluar(name, idx, h)[0] - evaluar(name, idx, -h)[0]) / (2 * h)
            a = float(analitico[name][idx])
            error = abs(a - numerico) / max(abs(a), abs(numerico), 1e-4)
            peor = max(peor, error)

    if peor > tol:
        logger.warning(f"⚠️ Gradiente con error relativo {peor:.2e} (tolerancia {tol:.0e})")
    logger.debug(f"Chequeo de gradiente: {omitidas} coordenadas omitidas cerca de bisagras")
    return peor
