"""
Entrenamiento, predicción y búsqueda en grilla de los modelos directos (S-TLM, C-TLM)
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.model_selection import ParameterGrid, train_test_split

from app.crud.checkpoint_crud import model_class
from app.errors import ConfigError
from app.models.representacion import BaseTimelineModel, Vocabulary
from app.schemas.corpus_schemas import Document
from app.schemas.report_schemas import AwarenessReport
from app.schemas.timeline_schemas import RelativeTimeline
from app.schemas.training_schemas import TrainConfig
from app.services import autograd as ag
from app.services.evaluacion import assign_labels, corpus_awareness
from app.services.timeline import batch_loss

logger = logging.getLogger(__name__)

GRID_KEYS = ("d_min", "m_tau", "dropout", "rnn_units")
LOSS_KEYS = ("d_min", "m_tau")


@dataclass
class TrainResult:
    model: BaseTimelineModel
    log: pd.DataFrame
    best_epoch: int
    stopped_early: bool
    dev_loss: float
    dev_f1: float


@dataclass
class GridResult:
    best: Dict[str, Any]
    best_result: TrainResult
    table: pd.DataFrame


class ModeloService:
    """Entrenamiento por mini-lotes de TLinks con parada temprana sobre un dev a nivel documento"""

    def split(self, corpus: Sequence[Document], cfg: TrainConfig) -> Tuple[List[Document], List[Document]]:
        """
        Separar una fracción de documentos para el dev

        Raises:
            ConfigError: si no quedan TLinks de dev
        """
        corpus = list(corpus)
        if cfg.dev_fraction <= 0 or len(corpus) < 2:
            raise ConfigError(
                "No hay TLinks de dev para la parada temprana: use dev_fraction > 0 "
                "con al menos 2 documentos o pase un dev explícito"
            )
        train_docs, dev_docs = train_test_split(corpus, test_size=cfg.dev_fraction, random_state=cfg.seed)
        return list(train_docs), list(dev_docs)

    def _con_tlinks(self, docs: Sequence[Document], nombre: str) -> List[Document]:
        con = [d for d in docs if d.tlinks]
        if len(con) < len(docs):
            logger.warning(f"⚠️ {len(docs) - len(con)} documentos de {nombre} sin TLinks fueron descartados")
        return con

    def _batch_loss(self, model: BaseTimelineModel, params: Dict[str, Any], docs: Sequence[Document],
                    dropout_mask: Optional[np.ndarray] = None, items=None):
        batch = model.batch(docs)
        if items is None:
            items = [(k, t) for k, d in enumerate(docs) for t in d.tlinks]
        compiled = model.compile(batch, items)
        return batch_loss(model.points(params, batch, dropout_mask), compiled, model.cfg.loss), len(items)

    def dev_metrics(self, model: BaseTimelineModel, dev: Sequence[Document]) -> Tuple[float, AwarenessReport]:
        """Pérdida media por TLink y temporal awareness sobre el dev"""
        loss, n = self._batch_loss(model, model.store.tensors, dev)
        timelines = model.predict_batch(list(dev))
        reporte = corpus_awareness(
            (d.id, d.tlinks, assign_labels(tl, d.tlinks, model.cfg.loss)) for d, tl in zip(dev, timelines)
        )
        return float(ag.value_of(loss)) / max(n, 1), reporte

    def train(self, kind: str, corpus: Sequence[Document], cfg: TrainConfig = None,
              dev: Optional[Sequence[Document]] = None,
              embeddings: Optional[Dict[str, np.ndarray]] = None,
              vocab: Optional[Vocabulary] = None) -> TrainResult:
        """
        Entrenar un modelo

        Cada época baraja los documentos de entrenamiento, recorre sus TLinks en
        mini-lotes de batch_size y aplica un paso de Adam por lote. Devuelve los
        parámetros de la mejor época sobre el dev.

        Raises:
            ConfigError: corpus vacío o sin dev disponible
        """
        cfg = cfg or TrainConfig()
        corpus = list(corpus)
        if not corpus:
            raise ConfigError("El corpus de entrenamiento está vacío")
        if dev is None:
            corpus, dev = self.split(corpus, cfg)
        train_docs = self._con_tlinks(corpus, "entrenamiento")
        dev = self._con_tlinks(list(dev), "dev")
        if not train_docs:
            raise ConfigError("Ningún documento de entrenamiento tiene TLinks")
        if not dev:
            raise ConfigError("No hay TLinks de dev para la parada temprana: use dev_fraction > 0")

        vocab = vocab or Vocabulary.build(train_docs + dev, embeddings)
        model = model_class(kind)(vocab, cfg, embeddings)
        rng = np.random.default_rng(cfg.seed)
        logger.info(
            f"🚀 Entrenando {kind}: {len(train_docs)} documentos de entrenamiento, {len(dev)} de dev, "
            f"loss={cfg.loss.kind.value}, monitor={cfg.monitor}"
        )

        registros = []
        mejor_valor = np.inf if cfg.monitor == "loss" else -np.inf
        mejor_snapshot = model.store.snapshot()
        mejor_epoch, sin_mejora, detenido = 0, 0, False
        mejor_dev = (np.inf, 0.0)

        for epoch in range(1, cfg.max_epochs + 1):
            orden = rng.permutation(len(train_docs))
            items = [(int(i), t) for i in orden for t in train_docs[i].tlinks]
            perdida_epoch = 0.0
            for inicio in range(0, len(items), cfg.batch_size):
                lote = items[inicio: inicio + cfg.batch_size]
                posiciones = list(dict.fromkeys(i for i, _ in lote))
                local = {i: k for k, i in enumerate(posiciones)}
                docs = [train_docs[i] for i in posiciones]
                batch = model.batch(docs)
                mask = model.dropout_mask(batch, cfg.dropout, rng)

                tape = ag.Tape()
                params = model.store.bind(tape)
                compiled = model.compile(batch, [(local[i], t) for i, t in lote])
                loss = batch_loss(model.points(params, batch, mask), compiled, cfg.loss)
                perdida_epoch += float(ag.value_of(loss))
                ag.adam_step(model.store, tape.backward(loss), cfg.adam)

            dev_loss, reporte = self.dev_metrics(model, dev)
            registros.append({
                "epoch": epoch,
                "train_loss": perdida_epoch / len(items),
                "dev_loss": dev_loss,
                "dev_f1": reporte.f1,
            })

            mejora = dev_loss < mejor_valor if cfg.monitor == "loss" else reporte.f1 > mejor_valor
            if mejora:
                mejor_valor = dev_loss if cfg.monitor == "loss" else reporte.f1
                mejor_snapshot = model.store.snapshot()
                mejor_epoch, sin_mejora = epoch, 0
                mejor_dev = (dev_loss, reporte.f1)
            else:
                sin_mejora += 1
                if sin_mejora >= cfg.patience:
                    detenido = True
                    logger.info(f"⏹️ Parada temprana en la época {epoch} (mejor: {mejor_epoch})")
                    break

        model.store.restore(mejor_snapshot)
        log = pd.DataFrame(registros, columns=["epoch", "train_loss", "dev_loss", "dev_f1"])
        logger.info(
            f"✅ {kind} entrenado: mejor época {mejor_epoch}, dev loss {mejor_dev[0]:.4f}, dev F1 {mejor_dev[1]:.3f}"
        )
        return TrainResult(model=model, log=log, best_epoch=mejor_epoch, stopped_early=detenido,
                           dev_loss=float(mejor_dev[0]), dev_f1=float(mejor_dev[1]))

    def predict(self, model: BaseTimelineModel, doc: Document) -> RelativeTimeline:
        return model.predict(doc)

    def predict_corpus(self, model: BaseTimelineModel, docs: Sequence[Document],
                       batch_size: int = 32) -> List[Tuple[str, RelativeTimeline]]:
        docs = list(docs)
        salida = []
        for inicio in range(0, len(docs), batch_size):
            lote = docs[inicio: inicio + batch_size]
            salida.extend(zip([d.id for d in lote], model.predict_batch(lote)))
        logger.info(f"📄 {len(salida)} time-lines predichos con {model.kind}")
        return salida

    def enumerate_grid(self, grids: Dict[str, Sequence[Any]]) -> List[Dict[str, Any]]:
        """
        Todas las combinaciones de la grilla, en orden determinista

        Raises:
            ConfigError: grilla vacía, lista vacía o clave no soportada
        """
        if not grids:
            raise ConfigError("La grilla está vacía")
        desconocidas = sorted(set(grids) - set(GRID_KEYS))
        if desconocidas:
            raise ConfigError(f"Claves de grilla no soportadas: {desconocidas}; opciones: {list(GRID_KEYS)}")
        vacias = [k for k, v in grids.items() if len(v) == 0]
        if vacias:
            raise ConfigError(f"La grilla tiene listas vacías: {vacias}")
        return list(ParameterGrid({k: list(v) for k, v in grids.items()}))

    def config_for(self, base: TrainConfig, combo: Dict[str, Any]) -> TrainConfig:
        loss = base.loss.model_copy(update={k: v for k, v in combo.items() if k in LOSS_KEYS})
        resto = {k: v for k, v in combo.items() if k not in LOSS_KEYS}
        return TrainConfig(**{**base.model_dump(), **resto, "loss": loss.model_dump()})

    def grid_search(self, kind: str, corpus: Sequence[Document], grids: Dict[str, Sequence[Any]],
                    cfg: TrainConfig = None, dev: Optional[Sequence[Document]] = None,
                    embeddings: Optional[Dict[str, np.ndarray]] = None) -> GridResult:
        """
        Entrenar un modelo por combinación y ordenarlas por F1 de dev

        Los empates conservan el orden de enumeración.
        """
        cfg = cfg or TrainConfig()
        combos = self.enumerate_grid(grids)
        corpus = list(corpus)
        if dev is None:
            corpus, dev = self.split(corpus, cfg)
        vocab = Vocabulary.build(self._con_tlinks(corpus, "entrenamiento") + self._con_tlinks(list(dev), "dev"),
                                 embeddings)
        logger.info(f"🧪 Búsqueda en grilla de {kind}: {len(combos)} combinaciones")

        filas, resultados = [], []
        for n, combo in enumerate(combos):
            resultado = self.train(kind, corpus, self.config_for(cfg, combo), dev, embeddings, vocab)
            resultados.append(resultado)
            filas.append({**combo, "run": n, "dev_f1": resultado.dev_f1, "dev_loss": resultado.dev_loss,
                          "best_epoch": resultado.best_epoch})
            logger.info(f"📊 Combinación {n + 1}/{len(combos)} {combo}: dev F1 {resultado.dev_f1:.3f}")

        table = pd.DataFrame(filas).sort_values("dev_f1", ascending=False, kind="mergesort").reset_index(drop=True)
        ganador = int(table.loc[0, "run"])
        logger.info(f"✅ Mejor combinación: {combos[ganador]} (dev F1 {resultados[ganador].dev_f1:.3f})")
        return GridResult(best=combos[ganador], best_result=resultados[ganador], table=table)


modelo_service = ModeloService()


def train(kind: str, corpus: Sequence[Document], cfg: TrainConfig = None, dev: Optional[Sequence[Document]] = None,
          embeddings: Optional[Dict[str, np.ndarray]] = None) -> TrainResult:
    return modelo_service.train(kind, corpus, cfg, dev, embeddings)


def predict(model: BaseTimelineModel, doc: Document) -> RelativeTimeline:
    return modelo_service.predict(model, doc)


def predict_corpus(model: BaseTimelineModel, docs: Sequence[Document], batch_size: int = 32):
    return modelo_service.predict_corpus(model, docs, batch_size)


def enumerate_grid(grids: Dict[str, Sequence[Any]]) -> List[Dict[str, Any]]:
    return modelo_service.enumerate_grid(grids)


def grid_search(kind: str, corpus: Sequence[Document], grids: Dict[str, Sequence[Any]], cfg: TrainConfig = None,
                dev: Optional[Sequence[Document]] = None, embeddings: Optional[Dict[str, np.ndarray]] = None) -> GridResult:
    return modelo_service.grid_search(kind, corpus, grids, cfg, dev, embeddings)
