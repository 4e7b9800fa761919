"""
Evaluación de time-lines: temporal awareness bajo clausura, matrices de
confusión y reportes de análisis
"""
import logging
import time
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.metrics import confusion_matrix

from app.errors import ContractViolation, EntityUniverseError
from app.schemas.corpus_schemas import Document, SynthConfig, TLink
from app.schemas.report_schemas import AwarenessReport, ConfusionMatrix
from app.schemas.timeline_schemas import LossConfig, RelativeTimeline
from app.services.generador import generate_synthetic
from app.services.pointalg import CANONICAL_ORDER, RELATION_INDEX, TLinkType, entails_tlink, is_consistent, tlink_closure
from app.services.timeline import derive_tlinks, relation_loss, tlink_loss

logger = logging.getLogger(__name__)


def assign_labels(tl: RelativeTimeline, gold: Sequence[TLink], cfg: LossConfig) -> List[TLink]:
    """Relación derivada del time-line para cada par anotado"""
    return derive_tlinks(tl, [(t.source, t.target) for t in gold], cfg)


def _orden(tlinks: Iterable[TLink]) -> List[TLink]:
    unicos = {(t.source, t.target, t.relation): t for t in tlinks}
    return sorted(unicos.values(), key=lambda t: (RELATION_INDEX[t.relation], t.source, t.target))


def reduce_tlinks(tlinks: Sequence[TLink]) -> List[TLink]:
    """
    Reducción transitiva greedy

    Recorre en orden canónico (relación, fuente, destino) y descarta cada TLink
    que la clausura de los que quedan ya implica.
    """
    restantes = _orden(tlinks)
    k = 0
    while k < len(restantes):
        candidato = restantes[k]
        resto = restantes[:k] + restantes[k + 1:]
        if resto and entails_tlink(tlink_closure(resto), candidato.relation, candidato.source, candidato.target):
            restantes = resto
        else:
            k += 1
    return restantes


def _f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def temporal_awareness(reference: Sequence[TLink], system: Sequence[TLink]) -> AwarenessReport:
    """
    Precisión: TLinks del sistema reducido implicados por la clausura de la referencia.
    Cobertura: TLinks de la referencia reducida implicados por la clausura del sistema.

    Un sistema inconsistente se evalúa con la clausura de sus restricciones tal
    cual (las celdas inconsistentes no implican nada) y queda marcado.
    """
    reference, system = list(reference), list(system)
    consistente, _ = is_consistent(system)
    red_ref = reduce_tlinks(reference)
    red_sys = reduce_tlinks(system)
    clausura_ref = tlink_closure(reference)
    clausura_sys = tlink_closure(system)

    p_hits = sum(1 for t in red_sys if entails_tlink(clausura_ref, t.relation, t.source, t.target))
    r_hits = sum(1 for t in red_ref if entails_tlink(clausura_sys, t.relation, t.source, t.target))
    return _report(p_hits, len(red_sys), r_hits, len(red_ref), not consistente)


def _report(p_hits: int, n_sys: int, r_hits: int, n_ref: int, inconsistent: bool,
            per_document: Optional[List[Dict[str, Any]]] = None) -> AwarenessReport:
    if n_sys == 0 and n_ref == 0:
        precision = recall = 1.0
    else:
        precision = p_hits / n_sys if n_sys else 0.0
        recall = r_hits / n_ref if n_ref else 0.0
    return AwarenessReport(
        precision=precision, recall=recall, f1=_f1(precision, recall),
        reference_count=n_ref, system_count=n_sys, precision_hits=p_hits, recall_hits=r_hits,
        inconsistent=inconsistent, per_document=per_document or [],
    )


def corpus_awareness(items: Iterable[Tuple[str, Sequence[TLink], Sequence[TLink]]]) -> AwarenessReport:
    """Micro-promedio sobre documentos (id, referencia, sistema)"""
    por_doc = []
    p_hits = n_sys = r_hits = n_ref = 0
    inconsistente = False
    for doc_id, reference, system in items:
        rep = temporal_awareness(reference, system)
        por_doc.append({"id": doc_id, "precision": rep.precision, "recall": rep.recall, "f1": rep.f1,
                        "inconsistent": rep.inconsistent})
        p_hits += rep.precision_hits
        n_sys += rep.system_count
        r_hits += rep.recall_hits
        n_ref += rep.reference_count
        inconsistente = inconsistente or rep.inconsistent
    return _report(p_hits, n_sys, r_hits, n_ref, inconsistente, por_doc)


def check_universe(doc: Document, tl: RelativeTimeline) -> None:
    """
    Raises:
        EntityUniverseError: con el primer id que no aparece en ambos lados
    """
    for e in doc.entity_order():
        if e not in tl.entries:
            raise EntityUniverseError(f"Documento '{doc.id}': la entidad '{e}' no está en el time-line")
    ids = {e.id for e in doc.entities}
    for e in tl.ids:
        if e not in ids:
            raise EntityUniverseError(f"Documento '{doc.id}': la entidad '{e}' del time-line no existe en el documento")


def evaluate_timelines(docs: Sequence[Document], timelines: Dict[str, RelativeTimeline],
                       cfg: LossConfig) -> Tuple[AwarenessReport, List[TLink], List[TLink]]:
    """
    Derivar etiquetas para los TLinks gold de cada documento y puntuarlas

    Returns:
        (reporte, gold aplanado, predicción aplanada)
    """
    items, gold, pred = [], [], []
    for doc in docs:
        if doc.id not in timelines:
            raise EntityUniverseError(f"No hay time-line para el documento '{doc.id}'")
        tl = timelines[doc.id]
        check_universe(doc, tl)
        labels = assign_labels(tl, doc.tlinks, cfg)
        items.append((doc.id, doc.tlinks, labels))
        gold.extend(doc.tlinks)
        pred.extend(labels)
    return corpus_awareness(items), gold, pred


def confusion(gold: Sequence[TLink], predicted: Sequence[TLink], top_k: int = 5) -> ConfusionMatrix:
    """
    Matriz sobre las top_k etiquetas gold más frecuentes. Los empates se
    resuelven por frecuencia en la predicción y luego por el orden canónico;
    las etiquetas que sólo aparecen en la predicción van al final

    Raises:
        ContractViolation: si las listas no están alineadas par a par
    """
    if len(gold) != len(predicted):
        raise ContractViolation(f"Listas desalineadas: {len(gold)} gold y {len(predicted)} predichos")
    for g, p in zip(gold, predicted):
        if (g.source, g.target) != (p.source, p.target):
            raise ContractViolation(f"Par desalineado: ({g.source}, {g.target}) vs ({p.source}, {p.target})")

    en_gold = pd.Series([g.relation.value for g in gold], dtype=object).value_counts()
    en_pred = pd.Series([p.relation.value for p in predicted], dtype=object).value_counts()
    etiquetas = sorted(
        set(en_gold.index) | set(en_pred.index),
        key=lambda r: (-en_gold.get(r, 0), -en_pred.get(r, 0), RELATION_INDEX[TLinkType(r)]),
    )
    etiquetas = list(etiquetas[:top_k])
    if not etiquetas:
        return ConfusionMatrix(labels=[], counts=[], total=0)
    counts = confusion_matrix([g.relation.value for g in gold], [p.relation.value for p in predicted],
                              labels=etiquetas)
    return ConfusionMatrix(labels=etiquetas, counts=counts.tolist(), total=len(gold))


def _entity_table(docs: Sequence[Document], timelines: Dict[str, RelativeTimeline]) -> pd.DataFrame:
    filas = []
    for doc in docs:
        tl = timelines.get(doc.id)
        if tl is None:
            continue
        for e in doc.entities:
            if e.span is None or e.id not in tl.entries:
                continue
            filas.append({"surface": doc.surface(e.id), "start": tl.start(e.id),
                          "duration": tl.end(e.id) - tl.start(e.id)})
    return pd.DataFrame(filas, columns=["surface", "start", "duration"])


def extremes_report(docs: Sequence[Document], timelines: Dict[str, RelativeTimeline],
                    k: int = 5) -> Dict[str, List[Tuple[str, float]]]:
    """Las k formas con duración media más corta/larga y con inicio medio más temprano/tardío"""
    df = _entity_table(docs, timelines)
    if df.empty:
        return {"shortest": [], "longest": [], "earliest": [], "latest": []}
    medias = df.groupby("surface", as_index=False)[["start", "duration"]].mean()

    def top(columna: str, ascendente: bool) -> List[Tuple[str, float]]:
        orden = medias.sort_values([columna, "surface"], ascending=[ascendente, True], kind="mergesort")
        return [(s, float(v)) for s, v in zip(orden["surface"].head(k), orden[columna].head(k))]

    return {
        "shortest": top("duration", True),
        "longest": top("duration", False),
        "earliest": top("start", True),
        "latest": top("start", False),
    }


def distance_report(docs: Sequence[Document], timelines: Dict[str, RelativeTimeline],
                    cfg: LossConfig) -> Dict[str, Any]:
    """Distancia media en tokens entre los argumentos de TLinks satisfechos y violados (sin el DCT)"""
    satisfechos, violados = [], []
    for doc in docs:
        tl = timelines.get(doc.id)
        if tl is None:
            continue
        for t in doc.tlinks:
            fuente, destino = doc.entity(t.source), doc.entity(t.target)
            if fuente.span is None or destino.span is None:
                continue
            distancia = abs(fuente.last_token - destino.last_token)
            if float(tlink_loss(t, tl, cfg)) == 0.0:
                satisfechos.append(distancia)
            else:
                violados.append(distancia)
    return {
        "satisfied_mean": float(np.mean(satisfechos)) if satisfechos else None,
        "violated_mean": float(np.mean(violados)) if violados else None,
        "satisfied_count": len(satisfechos),
        "violated_count": len(violados),
    }


def label_distribution(docs: Sequence[Document]) -> pd.DataFrame:
    """Cantidad y proporción de cada relación anotada, en orden canónico"""
    conteo = {r.value: 0 for r in CANONICAL_ORDER}
    for doc in docs:
        for t in doc.tlinks:
            conteo[t.relation.value] += 1
    total = sum(conteo.values())
    return pd.DataFrame({
        "relation": list(conteo),
        "count": list(conteo.values()),
        "share": [c / total if total else 0.0 for c in conteo.values()],
    })


def pairwise_reference_scores(tl: RelativeTimeline, cfg: LossConfig) -> int:
    """Puntuación par a par de las 11 relaciones para todos los pares ordenados (O(n^2))"""
    ids = tl.ids
    evaluados = 0
    for x in ids:
        for y in ids:
            if x == y:
                continue
            for r in CANONICAL_ORDER:
                relation_loss(r, x, y, tl, cfg)
                evaluados += 1
    return evaluados


def prediction_scaling_report(model, sizes: Sequence[int] = (40, 80), repeats: int = 5,
                              seed: int = 0) -> pd.DataFrame:
    """
    Tiempo de predicción del modelo frente a un puntuador par a par, para
    documentos sintéticos con una cantidad creciente de entidades

    Cada medición es el mínimo de `repeats` corridas, tras una corrida de
    calentamiento de ambos lados.
    """
    filas = []
    for n in sizes:
        doc = generate_synthetic(SynthConfig(n_docs=1, entities_per_doc=n, min_filler=2, max_filler=2), seed)[0]
        tiempos_modelo, tiempos_pares = [], []
        tl = model.predict(doc)
        pairwise_reference_scores(tl, model.cfg.loss)
        for _ in range(repeats):
            inicio = time.perf_counter()
            model.predict(doc)
            tiempos_modelo.append(time.perf_counter() - inicio)
            inicio = time.perf_counter()
            pairwise_reference_scores(tl, model.cfg.loss)
            tiempos_pares.append(time.perf_counter() - inicio)
        modelo_s = min(tiempos_modelo)
        filas.append({
            "entities": n,
            "tokens": len(doc.tokens),
            "model_seconds": modelo_s,
            "pairwise_seconds": min(tiempos_pares),
            "words_per_second": len(doc.tokens) / modelo_s if modelo_s > 0 else float("inf"),
        })
    df = pd.DataFrame(filas)
    df["model_ratio"] = df["model_seconds"] / df["model_seconds"].iloc[0]
    df["pairwise_ratio"] = df["pairwise_seconds"] / df["pairwise_seconds"].iloc[0]
    logger.info(f"📊 Escalamiento de predicción:\n{df.to_string(index=False)}")
    return df
