"""
Álgebra de puntos para TLinks de TimeML

Cada TLink se traduce a restricciones {<, =} sobre los puntos de inicio y fin
de sus entidades. La clausura se calcula sobre matrices booleanas de <= y <.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from app.errors import UnsupportedRelationError

logger = logging.getLogger(__name__)


class TLinkType(str, Enum):
    """Relaciones TimeML soportadas, en orden canónico"""
    BEFORE = "BEFORE"
    AFTER = "AFTER"
    IBEFORE = "IBEFORE"
    IAFTER = "IAFTER"
    BEGINS = "BEGINS"
    BEGUN_BY = "BEGUN_BY"
    ENDS = "ENDS"
    ENDED_BY = "ENDED_BY"
    IS_INCLUDED = "IS_INCLUDED"
    INCLUDES = "INCLUDES"
    SIMULTANEOUS = "SIMULTANEOUS"


CANONICAL_ORDER: List[TLinkType] = list(TLinkType)
RELATION_INDEX: Dict[TLinkType, int] = {r: i for i, r in enumerate(CANONICAL_ORDER)}

_INVERSES = {
    TLinkType.BEFORE: TLinkType.AFTER,
    TLinkType.IBEFORE: TLinkType.IAFTER,
    TLinkType.BEGINS: TLinkType.BEGUN_BY,
    TLinkType.ENDS: TLinkType.ENDED_BY,
    TLinkType.IS_INCLUDED: TLinkType.INCLUDES,
    TLinkType.SIMULTANEOUS: TLinkType.SIMULTANEOUS,
}
_INVERSES.update({v: k for k, v in list(_INVERSES.items())})

# Etiquetas que se normalizan al cargar
RELATION_ALIASES = {
    "DURING": TLinkType.SIMULTANEOUS,
    "DURING_INV": TLinkType.SIMULTANEOUS,
    "IDENTITY": TLinkType.SIMULTANEOUS,
}


class Side(str, Enum):
    START = "start"
    END = "end"


class PointOp(str, Enum):
    LESS = "<"
    EQUAL = "="


class PointRelation(str, Enum):
    """Celdas posibles de la matriz de clausura"""
    LESS = "<"
    EQUAL = "="
    GREATER = ">"
    LESS_EQ = "<="
    GREATER_EQ = ">="
    UNKNOWN = "?"
    INCONSISTENT = "!"


@dataclass(frozen=True, order=True)
class PointRef:
    entity: str
    side: Side

    def __str__(self) -> str:
        return f"{'s' if self.side == Side.START else 'e'}_{self.entity}"


@dataclass(frozen=True)
class PointConstraint:
    lhs: PointRef
    op: PointOp
    rhs: PointRef

    def canonical(self) -> "PointConstraint":
        """La igualdad es simétrica: ordena los operandos"""
        if self.op == PointOp.EQUAL and self.rhs < self.lhs:
            return PointConstraint(self.rhs, self.op, self.lhs)
        return self

    def __str__(self) -> str:
        return f"{self.lhs} {self.op.value} {self.rhs}"


def start(entity: str) -> PointRef:
    return PointRef(entity, Side.START)


def end(entity: str) -> PointRef:
    return PointRef(entity, Side.END)


def normalize_relation(label) -> TLinkType:
    """
    Convertir una etiqueta de relación a TLinkType

    DURING, DURING_INV e IDENTITY se mapean a SIMULTANEOUS. Cualquier otra
    etiqueta fuera del conjunto (por ejemplo OVERLAP) es un error.
    """
    if isinstance(label, TLinkType):
        return label
    texto = str(label).strip().upper()
    if texto in RELATION_ALIASES:
        return RELATION_ALIASES[texto]
    try:
        return TLinkType(texto)
    except ValueError:
        aceptadas = ", ".join(r.value for r in CANONICAL_ORDER)
        raise UnsupportedRelationError(
            f"'{label}' no es un TLink de TimeML soportado; etiquetas aceptadas: {aceptadas} "
            f"(y DURING, DURING_INV, IDENTITY como SIMULTANEOUS)"
        )


def invert(r: TLinkType) -> TLinkType:
    return _INVERSES[r]


def interpret(r: TLinkType, x: str, y: str) -> List[PointConstraint]:
    """
    Interpretación en álgebra de puntos de "x r y"

    Las relaciones inversas se obtienen intercambiando los operandos.
    """
    less, equal = PointOp.LESS, PointOp.EQUAL
    if r == TLinkType.BEFORE:
        return [PointConstraint(end(x), less, start(y))]
    if r == TLinkType.IBEFORE:
        return [PointConstraint(end(x), equal, start(y))]
    if r == TLinkType.BEGINS:
        return [PointConstraint(start(x), equal, start(y)), PointConstraint(end(x), less, end(y))]
    if r == TLinkType.ENDS:
        return [PointConstraint(end(x), equal, end(y)), PointConstraint(start(y), less, start(x))]
    if r == TLinkType.IS_INCLUDED:
        return [PointConstraint(start(y), less, start(x)), PointConstraint(end(x), less, end(y))]
    if r == TLinkType.SIMULTANEOUS:
        return [PointConstraint(start(x), equal, start(y)), PointConstraint(end(x), equal, end(y))]
    return interpret(invert(r), y, x)


def _tlink_constraints(tlinks: Iterable) -> List[PointConstraint]:
    constraints = []
    for tlink in tlinks:
        constraints.extend(interpret(tlink.relation, tlink.source, tlink.target))
    return constraints


class PointClosure:
    """
    Clausura de un conjunto de restricciones de punto

    le[i, j] indica que i <= j está implicado y lt[i, j] que i < j lo está.
    """

    def __init__(self, points: Sequence[PointRef], le: np.ndarray, lt: np.ndarray):
        self.points = list(points)
        self.index = {p: i for i, p in enumerate(self.points)}
        self.le = le
        self.lt = lt
        self.inconsistent = (lt & le.T) | (lt.T & le)

    @property
    def is_consistent(self) -> bool:
        return not bool(self.inconsistent.any())

    def relation(self, a: PointRef, b: PointRef) -> PointRelation:
        if a not in self.index or b not in self.index:
            return PointRelation.UNKNOWN
        i, j = self.index[a], self.index[b]
        if self.inconsistent[i, j]:
            return PointRelation.INCONSISTENT
        if self.lt[i, j]:
            return PointRelation.LESS
        if self.lt[j, i]:
            return PointRelation.GREATER
        if self.le[i, j] and self.le[j, i]:
            return PointRelation.EQUAL
        if self.le[i, j]:
            return PointRelation.LESS_EQ
        if self.le[j, i]:
            return PointRelation.GREATER_EQ
        return PointRelation.UNKNOWN

    def matrix(self) -> List[List[PointRelation]]:
        return [[self.relation(a, b) for b in self.points] for a in self.points]

    def entails(self, constraint: PointConstraint) -> bool:
        esperado = PointRelation.LESS if constraint.op == PointOp.LESS else PointRelation.EQUAL
        return self.relation(constraint.lhs, constraint.rhs) == esperado

    def entails_all(self, constraints: Iterable[PointConstraint]) -> bool:
        return all(self.entails(c) for c in constraints)


def _entity_points(constraints: Iterable[PointConstraint], points: Iterable[PointRef] = ()) -> List[PointRef]:
    entidades = []
    vistos = set()
    for p in list(points) + [q for c in constraints for q in (c.lhs, c.rhs)]:
        if p.entity not in vistos:
            vistos.add(p.entity)
            entidades.append(p.entity)
    return [q for e in entidades for q in (start(e), end(e))]


def point_closure(constraints: Sequence[PointConstraint], points: Sequence[PointRef] = ()) -> PointClosure:
    """
    Punto fijo de la composición en álgebra de puntos

    Se agregan ambos puntos de cada entidad referenciada junto con s_i < e_i.
    """
    todos = _entity_points(constraints, points)
    index = {p: i for i, p in enumerate(todos)}
    n = len(todos)
    le = np.eye(n, dtype=bool)
    lt = np.zeros((n, n), dtype=bool)

    for i in range(0, n, 2):
        lt[i, i + 1] = le[i, i + 1] = True

    for c in constraints:
        a, b = index[c.lhs], index[c.rhs]
        le[a, b] = True
        if c.op == PointOp.LESS:
            lt[a, b] = True
        else:
            le[b, a] = True

    # Clausura reflexiva-transitiva de <= por cuadrados sucesivos
    while True:
        siguiente = le | ((le.astype(np.int64) @ le.astype(np.int64)) > 0)
        if np.array_equal(siguiente, le):
            break
        le = siguiente

    # a < c si existe un camino de <= con al menos un paso estricto
    le_int = le.astype(np.int64)
    lt = (le_int @ lt.astype(np.int64) @ le_int) > 0
    return PointClosure(todos, le, lt)


def tlink_closure(tlinks: Sequence, entities: Iterable[str] = ()) -> PointClosure:
    """Clausura de la interpretación de un conjunto de TLinks"""
    return point_closure(_tlink_constraints(tlinks), [start(e) for e in entities])


def is_consistent(tlinks: Sequence) -> Tuple[bool, Optional[Tuple[object, object]]]:
    """
    Verificar la consistencia de un conjunto de TLinks

    Returns:
        (True, None) o (False, (primer TLink en conflicto, TLink que lo contradice))
    """
    tlinks = list(tlinks)
    if tlink_closure(tlinks).is_consistent:
        return True, None

    # Menor prefijo inconsistente: su último TLink es el que introduce el conflicto
    culpable = None
    for k in range(1, len(tlinks) + 1):
        if not tlink_closure(tlinks[:k]).is_consistent:
            culpable = k - 1
            break

    for j in range(culpable):
        if not tlink_closure(tlinks[: j + 1] + [tlinks[culpable]]).is_consistent:
            logger.debug(f"Conflicto entre TLinks {j} y {culpable}")
            return False, (tlinks[j], tlinks[culpable])
    return False, (tlinks[culpable], tlinks[culpable])


def entails_tlink(closure: PointClosure, r: TLinkType, x: str, y: str) -> bool:
    return closure.entails_all(interpret(r, x, y))


def entailed_tlink(closure: PointClosure, x: str, y: str) -> Optional[TLinkType]:
    """Relación cuya interpretación completa está implicada por la clausura, si existe"""
    for r in CANONICAL_ORDER:
        if entails_tlink(closure, r, x, y):
            return r
    return None


def relation_between(start_x: float, end_x: float, start_y: float, end_y: float) -> Optional[TLinkType]:
    """
    Relación exacta entre dos intervalos concretos

    Las configuraciones de solapamiento no tienen nombre TimeML y devuelven None.
    """
    valores = {start("x"): start_x, end("x"): end_x, start("y"): start_y, end("y"): end_y}
    for r in CANONICAL_ORDER:
        cumple = True
        for c in interpret(r, "x", "y"):
            a, b = valores[c.lhs], valores[c.rhs]
            if (c.op == PointOp.LESS and not a < b) or (c.op == PointOp.EQUAL and a != b):
                cumple = False
                break
        if cumple:
            return r
    return None
