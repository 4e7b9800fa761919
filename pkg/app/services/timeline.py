"""
Time-lines relativos: puntos finales, pérdidas y derivación de TLinks

Las pérdidas escalares trabajan sobre cualquier objeto con start(id) y
duration(id) (RelativeTimeline o PointTimeline con Var del tape). La versión
vectorizada (TLinkBatch) calcula la pérdida de las 11 relaciones para K TLinks a la vez.
"""
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np
from lxml import etree

from app.schemas.corpus_schemas import Document, TLink
from app.schemas.timeline_schemas import LossConfig, LossKind, RelativeTimeline, TimelineEntry
from app.services import autograd as ag
from app.services.pointalg import (
    CANONICAL_ORDER,
    PointConstraint,
    PointOp,
    Side,
    TLinkType,
    interpret,
)

logger = logging.getLogger(__name__)

N_RELATIONS = len(CANONICAL_ORDER)


class TimelineView(Protocol):
    def start(self, entity_id: str): ...

    def duration(self, entity_id: str): ...


@dataclass
class PointTimeline:
    """Time-line cuyos valores pueden ser Var de un tape"""
    starts: Dict[str, Any]
    durations: Dict[str, Any]

    def start(self, entity_id: str):
        return self.starts[entity_id]

    def duration(self, entity_id: str):
        return self.durations[entity_id]


def end_point(start, duration, d_min: float):
    """e = s + max(d, d_min)"""
    return start + ag.maximum(duration, d_min)


def _coord(tl: TimelineView, ref, d_min: float):
    if ref.side == Side.START:
        return tl.start(ref.entity)
    return end_point(tl.start(ref.entity), tl.duration(ref.entity), d_min)


def _hinge(x, y, op: PointOp, m: float):
    if op == PointOp.LESS:
        return ag.maximum(x + m - y, 0.0)
    return ag.maximum(ag.maximum(x - y, y - x) - m, 0.0)


def point_loss(xi: PointConstraint, tl: TimelineView, cfg: LossConfig):
    x = _coord(tl, xi.lhs, cfg.d_min)
    y = _coord(tl, xi.rhs, cfg.d_min)
    return _hinge(x, y, xi.op, cfg.m_tau)


def relation_loss(r: TLinkType, x: str, y: str, tl: TimelineView, cfg: LossConfig):
    """L_r para la relación r entre x e y"""
    loss = 0.0
    for xi in interpret(r, x, y):
        loss = loss + point_loss(xi, tl, cfg)
    return loss


def tlink_loss(r: TLink, tl: TimelineView, cfg: LossConfig):
    return relation_loss(r.relation, r.source, r.target, tl, cfg)


def _tlinks_of(doc: Optional[Document], tlinks: Optional[Sequence[TLink]]) -> Sequence[TLink]:
    return doc.tlinks if tlinks is None else tlinks


def timeline_loss(doc: Optional[Document], tl: TimelineView, cfg: LossConfig,
                  tlinks: Optional[Sequence[TLink]] = None):
    """L_tau: suma de L_r sobre los TLinks anotados"""
    loss = 0.0
    for r in _tlinks_of(doc, tlinks):
        loss = loss + tlink_loss(r, tl, cfg)
    return loss


def score(r: TLinkType, x: str, y: str, tl: TimelineView, cfg: LossConfig):
    """S = -L_r; el máximo es 0"""
    return -relation_loss(r, x, y, tl, cfg)


def _pair_scores(x: str, y: str, tl: TimelineView, cfg: LossConfig):
    return ag.stack([score(r, x, y, tl, cfg) for r in CANONICAL_ORDER])


def ce_loss(doc: Optional[Document], tl: TimelineView, cfg: LossConfig,
            tlinks: Optional[Sequence[TLink]] = None):
    """-log softmax del score de la relación anotada, sumado sobre TLinks"""
    loss = 0.0
    for r in _tlinks_of(doc, tlinks):
        scores = _pair_scores(r.source, r.target, tl, cfg)
        m = float(np.max(ag.value_of(scores)))
        lse = m + ag.log(ag.total(ag.exp(scores - m)))
        loss = loss + lse - scores[CANONICAL_ORDER.index(r.relation)]
    return loss


def rank_loss(doc: Optional[Document], tl: TimelineView, cfg: LossConfig,
              tlinks: Optional[Sequence[TLink]] = None):
    """Suma de max(S(r') - S(r) + m_h, 0) sobre las relaciones r' != r"""
    loss = 0.0
    for r in _tlinks_of(doc, tlinks):
        gold = score(r.relation, r.source, r.target, tl, cfg)
        for other in CANONICAL_ORDER:
            if other == r.relation:
                continue
            loss = loss + ag.maximum(score(other, r.source, r.target, tl, cfg) - gold + cfg.m_h, 0.0)
    return loss


def combined_loss(doc: Optional[Document], tl: TimelineView, cfg: LossConfig,
                  tlinks: Optional[Sequence[TLink]] = None):
    """L_* = L_tau + L_tau_ce + L_tau_h"""
    return (timeline_loss(doc, tl, cfg, tlinks) + ce_loss(doc, tl, cfg, tlinks)
            + rank_loss(doc, tl, cfg, tlinks))


LOSS_FUNCTIONS = {
    LossKind.TAU: timeline_loss,
    LossKind.CE: ce_loss,
    LossKind.HINGE: rank_loss,
    LossKind.STAR: combined_loss,
}


def loss_for(kind: LossKind):
    return LOSS_FUNCTIONS[LossKind(kind)]


def derive_tlink(x: str, y: str, tl: TimelineView, cfg: LossConfig) -> TLinkType:
    """Relación de menor L_r; los empates se resuelven por el orden canónico"""
    losses = [float(ag.value_of(relation_loss(r, x, y, tl, cfg))) for r in CANONICAL_ORDER]
    return CANONICAL_ORDER[int(np.argmin(losses))]


# Forma vectorizada


def _relation_template() -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Para cada relación y cada una de sus (hasta dos) restricciones: de qué
    operando sale cada lado, si es un fin y qué operador usa
    """
    lhs_y = np.zeros((N_RELATIONS, 2), dtype=bool)
    lhs_end = np.zeros((N_RELATIONS, 2), dtype=bool)
    rhs_y = np.zeros((N_RELATIONS, 2), dtype=bool)
    rhs_end = np.zeros((N_RELATIONS, 2), dtype=bool)
    less = np.zeros((N_RELATIONS, 2))
    equal = np.zeros((N_RELATIONS, 2))
    for j, r in enumerate(CANONICAL_ORDER):
        for c, xi in enumerate(interpret(r, "x", "y")):
            lhs_y[j, c] = xi.lhs.entity == "y"
            lhs_end[j, c] = xi.lhs.side == Side.END
            rhs_y[j, c] = xi.rhs.entity == "y"
            rhs_end[j, c] = xi.rhs.side == Side.END
            if xi.op == PointOp.LESS:
                less[j, c] = 1.0
            else:
                equal[j, c] = 1.0
    return lhs_y, lhs_end, rhs_y, rhs_end, less, equal


_TEMPLATE = _relation_template()


@dataclass
class TLinkBatch:
    """Índices de puntos de K TLinks para las 11 relaciones candidatas"""
    lhs: np.ndarray  # (K, 11, 2)
    rhs: np.ndarray  # (K, 11, 2)
    gold: np.ndarray  # (K,)
    n_entities: int
    less: np.ndarray = field(default_factory=lambda: _TEMPLATE[4])
    equal: np.ndarray = field(default_factory=lambda: _TEMPLATE[5])

    def __len__(self) -> int:
        return len(self.gold)


def compile_pairs(pairs: Sequence[Tuple[int, int, Optional[TLinkType]]], n_entities: int) -> TLinkBatch:
    """
    Compilar pares (índice fuente, índice destino, relación) sobre n entidades

    El punto de inicio de la entidad i es i y su fin es n + i.
    """
    lhs_y, lhs_end, rhs_y, rhs_end, _, _ = _TEMPLATE
    k = len(pairs)
    src = np.array([p[0] for p in pairs], dtype=np.int64).reshape(k, 1, 1)
    tgt = np.array([p[1] for p in pairs], dtype=np.int64).reshape(k, 1, 1)
    gold = np.array([CANONICAL_ORDER.index(p[2]) if p[2] is not None else 0 for p in pairs], dtype=np.int64)
    lhs = np.where(lhs_y, tgt, src) + n_entities * lhs_end
    rhs = np.where(rhs_y, tgt, src) + n_entities * rhs_end
    return TLinkBatch(lhs=lhs.reshape(k, N_RELATIONS, 2), rhs=rhs.reshape(k, N_RELATIONS, 2),
                      gold=gold, n_entities=n_entities)


def compile_tlinks(tlinks: Sequence[TLink], index: Dict[str, int]) -> TLinkBatch:
    return compile_pairs([(index[t.source], index[t.target], t.relation) for t in tlinks], len(index))


def timeline_points(starts, durations, d_min: float):
    """Vector [inicios..., fines...] de longitud 2n"""
    return ag.concat([starts, end_point(starts, durations, d_min)])


def relation_loss_matrix(points, batch: TLinkBatch, cfg: LossConfig):
    """Matriz K x 11 con L_r de cada TLink para cada relación candidata"""
    x = points[batch.lhs]
    y = points[batch.rhs]
    less = ag.maximum(x + cfg.m_tau - y, 0.0)
    equal = ag.maximum(ag.maximum(x - y, y - x) - cfg.m_tau, 0.0)
    return ag.total(less * batch.less + equal * batch.equal, axis=2)


def gold_relation_losses(points, batch: TLinkBatch, cfg: LossConfig):
    """L_r de la relación anotada de cada TLink (vector de largo K)"""
    filas = np.arange(len(batch))
    x = points[batch.lhs[filas, batch.gold]]
    y = points[batch.rhs[filas, batch.gold]]
    less = ag.maximum(x + cfg.m_tau - y, 0.0)
    equal = ag.maximum(ag.maximum(x - y, y - x) - cfg.m_tau, 0.0)
    return ag.total(less * batch.less[batch.gold] + equal * batch.equal[batch.gold], axis=1)


def batch_loss(points, batch: TLinkBatch, cfg: LossConfig, kind: Optional[LossKind] = None):
    """Pérdida sumada de un lote de TLinks para tau, ce, hinge o star"""
    kind = LossKind(kind or cfg.kind)
    if len(batch) == 0:
        return 0.0
    if kind == LossKind.TAU:
        return ag.total(gold_relation_losses(points, batch, cfg))

    losses = relation_loss_matrix(points, batch, cfg)
    filas = np.arange(len(batch))
    gold_loss = losses[filas, batch.gold]
    total = 0.0

    if kind == LossKind.STAR:
        total = total + ag.total(gold_loss)

    if kind in (LossKind.CE, LossKind.STAR):
        scores = -losses
        m = np.max(ag.value_of(scores), axis=1, keepdims=True)
        lse = ag.log(ag.total(ag.exp(scores - m), axis=1)) + m[:, 0]
        total = total + ag.total(lse + gold_loss)

    if kind in (LossKind.HINGE, LossKind.STAR):
        otros = 1.0 - np.eye(N_RELATIONS)[batch.gold]
        gold_score = ag.reshape(-gold_loss, (len(batch), 1))
        hinge = ag.maximum(-losses - gold_score + cfg.m_h, 0.0)
        total = total + ag.total(hinge * otros)

    return total


def _timeline_arrays(tl: RelativeTimeline) -> Tuple[List[str], np.ndarray]:
    ids = tl.ids
    starts = np.array([tl.start(i) for i in ids])
    durations = np.array([tl.duration(i) for i in ids])
    return ids, timeline_points(starts, durations, tl.d_min)


def derive_tlinks(tl: RelativeTimeline, pairs: Sequence[Tuple[str, str]], cfg: LossConfig) -> List[TLink]:
    """derive_tlink vectorizado sobre una lista de pares"""
    if not pairs:
        return []
    ids, points = _timeline_arrays(tl)
    index = {e: i for i, e in enumerate(ids)}
    batch = compile_pairs([(index[x], index[y], None) for x, y in pairs], len(ids))
    losses = relation_loss_matrix(points, batch, cfg)
    elegidas = np.argmin(losses, axis=1)
    return [TLink(source=x, target=y, relation=CANONICAL_ORDER[j]) for (x, y), j in zip(pairs, elegidas)]


def derive_all_tlinks(tl: RelativeTimeline, cfg: LossConfig) -> List[TLink]:
    """TLinks derivados para todos los pares no ordenados de entidades del time-line"""
    ids = tl.ids
    pairs = [(ids[i], ids[j]) for i in range(len(ids)) for j in range(i + 1, len(ids))]
    return derive_tlinks(tl, pairs, cfg)


# Serialización y render


def timeline_to_json(tl: RelativeTimeline) -> str:
    """{id: {"start": s, "end": e}} con 6 decimales fijos"""
    partes = [
        f'{json.dumps(i, ensure_ascii=False)}: {{"start": {tl.start(i):.6f}, "end": {tl.end(i):.6f}}}'
        for i in tl.ids
    ]
    return "{" + ", ".join(partes) + "}"


def timeline_from_json(data, dct_id: str, d_min: float) -> RelativeTimeline:
    """Reconstruir un time-line; la duración se toma como fin - inicio"""
    if isinstance(data, str):
        data = json.loads(data)
    entries = {
        i: TimelineEntry(start=float(v["start"]), duration=float(v["end"]) - float(v["start"]))
        for i, v in data.items()
    }
    return RelativeTimeline(entries=entries, dct_id=dct_id, d_min=d_min)


def _label(doc: Optional[Document], entity_id: str, dct_id: str) -> str:
    if entity_id == dct_id:
        return f"*{entity_id} (DCT)"
    if doc is None:
        return entity_id
    return f"{entity_id} {doc.surface(entity_id)}"


def _ordered(tl: RelativeTimeline) -> List[str]:
    return sorted(tl.ids, key=lambda i: (tl.start(i), tl.end(i), i))


def render(tl: RelativeTimeline, doc: Optional[Document] = None, fmt: str = "text", width: int = 60) -> str:
    """Barras horizontales ordenadas por inicio; el DCT se marca con '*'"""
    orden = _ordered(tl)
    lo = min(tl.start(i) for i in orden)
    hi = max(tl.end(i) for i in orden)
    escala = (hi - lo) or 1.0

    if fmt == "svg":
        return _render_svg(tl, doc, orden, lo, escala)
    if fmt != "text":
        raise ValueError(f"Formato de render desconocido: {fmt}")

    etiquetas = {i: _label(doc, i, tl.dct_id)[:28] for i in orden}
    ancho_etiqueta = max(len(e) for e in etiquetas.values())
    lineas = []
    for i in orden:
        a = int(round((tl.start(i) - lo) / escala * (width - 1)))
        b = max(a + 1, int(round((tl.end(i) - lo) / escala * (width - 1))))
        marca = "=" if i == tl.dct_id else "#"
        barra = " " * a + marca * (b - a) + " " * (width - b)
        lineas.append(f"{etiquetas[i]:<{ancho_etiqueta}} |{barra}| {tl.start(i):9.3f} {tl.end(i):9.3f}")
    return "\n".join(lineas) + "\n"


_SVG_NS = "http://www.w3.org/2000/svg"


def _render_svg(tl: RelativeTimeline, doc: Optional[Document], orden: List[str], lo: float, escala: float) -> str:
    ancho, alto_fila, margen = 600, 20, 180
    raiz = etree.Element(f"{{{_SVG_NS}}}svg", nsmap={None: _SVG_NS})
    raiz.set("width", str(ancho + margen + 20))
    raiz.set("height", str(20 + len(orden) * alto_fila))
    for k, i in enumerate(orden):
        x = margen + (tl.start(i) - lo) / escala * ancho
        w = max((tl.end(i) - tl.start(i)) / escala * ancho, 1.0)
        y = 10 + k * alto_fila
        etree.SubElement(raiz, f"{{{_SVG_NS}}}rect", {
            "x": f"{x:.2f}", "y": str(y), "width": f"{w:.2f}", "height": str(alto_fila - 4),
            "fill": "#d62728" if i == tl.dct_id else "#1f77b4",
        })
        texto = etree.SubElement(raiz, f"{{{_SVG_NS}}}text", {"x": "4", "y": str(y + alto_fila - 8), "font-size": "12"})
        # XML 1.0 no admite caracteres de control
        texto.text = "".join(c for c in _label(doc, i, tl.dct_id) if c >= " " or c in "\t\n\r")
    return etree.tostring(raiz, encoding="unicode", pretty_print=True)
