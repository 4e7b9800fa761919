"""
TL2RTL: construir un time-line relativo que satisfaga un conjunto de TLinks

Las únicas variables son los inicios y duraciones de las entidades y la
duración del DCT; su inicio es la constante s_dct.
"""
import concurrent.futures
import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.schemas.corpus_schemas import Document, TLink
from app.schemas.timeline_schemas import RelativeTimeline
from app.schemas.training_schemas import FitConfig, FitResult
from app.services import autograd as ag
from app.services.pointalg import is_consistent
from app.services.timeline import batch_loss, compile_tlinks, timeline_points, tlink_loss

logger = logging.getLogger(__name__)

Seed = Union[int, Sequence[int]]

POLISH_EPOCHS = 100


class TL2RTLService:
    """Optimización directa de time-lines por documento"""

    def _points(self, params: Dict[str, Any], cfg: FitConfig):
        starts = ag.concat([np.array([cfg.loss.s_dct]), params["starts"]])
        durations = ag.concat([ag.reshape(params["d_dct"], (1,)), params["durations"]])
        return timeline_points(starts, durations, cfg.loss.d_min)

    def _timeline(self, store: ag.ParamStore, ids: List[str], cfg: FitConfig) -> RelativeTimeline:
        starts = np.concatenate([[cfg.loss.s_dct], store["starts"]])
        durations = np.concatenate([[float(store["d_dct"])], store["durations"]])
        return RelativeTimeline.from_values(ids, starts, durations, ids[0], cfg.loss.d_min, cfg.loss.s_dct)

    def fit(self, doc: Document, tlinks: Optional[Sequence[TLink]] = None, cfg: FitConfig = None,
            seed: Seed = 0) -> FitResult:
        """
        Ajustar inicios y duraciones minimizando la pérdida elegida

        El DCT va primero; su duración se inicializa en 1.
        """
        cfg = cfg or FitConfig()
        tlinks = list(doc.tlinks if tlinks is None else tlinks)
        ids = doc.entity_order()
        n = len(ids) - 1
        rng = np.random.default_rng(seed)

        store = ag.ParamStore(seed=seed if isinstance(seed, int) else list(seed))
        store.add("starts", rng.uniform(0.0, n * cfg.init_spread, size=n))
        store.add("durations", np.full(n, cfg.init_duration))
        store.add("d_dct", 1.0)

        if not tlinks:
            return FitResult(doc_id=doc.id, timeline=self._timeline(store, ids, cfg), loss=0.0, tau_loss=0.0,
                             satisfied_fraction=1.0, consistent=True, epochs=0)

        index = {e: i for i, e in enumerate(ids)}
        batch = compile_tlinks(tlinks, index)
        kind = cfg.loss.kind

        mejor_loss = np.inf
        mejor = None
        epoch = 0
        pulido = 0
        for epoch in range(1, cfg.max_epochs + 1):
            tape = ag.Tape()
            loss = batch_loss(self._points(store.bind(tape), cfg), batch, cfg.loss, kind)
            valor = float(ag.value_of(loss))
            if valor < mejor_loss:
                mejor_loss = valor
                mejor = {k: v.copy() for k, v in store.tensors.items()}
            # Bajo el umbral se insiste unas épocas más hasta que las bisagras queden en cero exacto
            if valor == 0.0 or (valor <= cfg.eps_conv and pulido >= POLISH_EPOCHS):
                break
            if valor <= cfg.eps_conv:
                pulido += 1
            ag.adam_step(store, tape.backward(loss), cfg.adam)

        store.tensors.update(mejor)
        timeline = self._timeline(store, ids, cfg)

        perdidas = [float(tlink_loss(t, timeline, cfg.loss)) for t in tlinks]
        satisfechos = sum(1 for p in perdidas if p == 0.0)
        consistente, conflicto = is_consistent(tlinks)
        if not consistente:
            logger.warning(
                f"⚠️ Documento {doc.id}: TLinks inconsistentes ({conflicto[0].source}-{conflicto[0].target} "
                f"vs {conflicto[1].source}-{conflicto[1].target}), pérdida final {mejor_loss:.4f}"
            )

        return FitResult(
            doc_id=doc.id,
            timeline=timeline,
            loss=mejor_loss,
            tau_loss=float(sum(perdidas)),
            satisfied_fraction=satisfechos / len(tlinks),
            consistent=consistente,
            conflict=None if consistente else {
                "first": conflicto[0].model_dump(mode="json"),
                "second": conflicto[1].model_dump(mode="json"),
            },
            epochs=epoch,
        )

    def _fit_seguro(self, doc: Document, tlinks, cfg: FitConfig, seed: Seed) -> FitResult:
        try:
            return self.fit(doc, tlinks, cfg, seed)
        except Exception as e:
            logger.error(f"❌ Error ajustando el documento {doc.id}: {str(e)}")
            return FitResult(doc_id=doc.id, error=str(e))

    def fit_corpus(self, docs: Sequence[Document], tlink_source: Optional[Dict[str, List[TLink]]] = None,
                   cfg: FitConfig = None, seed: int = 0, jobs: int = 1) -> Tuple[List[FitResult], Dict[str, Any]]:
        """
        Ajustar cada documento de forma independiente

        Los errores por documento quedan en su resultado sin abortar el lote.

        Returns:
            (resultados ordenados por id de documento, resumen)
        """
        cfg = cfg or FitConfig()
        docs = list(docs)
        logger.info(f"🚀 TL2RTL sobre {len(docs)} documentos (loss={cfg.loss.kind.value}, jobs={jobs})")

        def tlinks_de(doc):
            if tlink_source is None:
                return None
            return tlink_source.get(doc.id, [])

        with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, jobs)) as executor:
            futuros = [
                executor.submit(self._fit_seguro, doc, tlinks_de(doc), cfg, [seed, i])
                for i, doc in enumerate(docs)
            ]
            resultados = [f.result() for f in futuros]

        resultados.sort(key=lambda r: r.doc_id)
        resumen = self.resumir(resultados, cfg.eps_conv)
        logger.info(
            f"📊 TL2RTL: {resumen['converged']}/{resumen['documents']} convergieron, "
            f"{resumen['failed']} con error, {resumen['inconsistent']} inconsistentes"
        )
        return resultados, resumen

    def resumir(self, resultados: List[FitResult], eps: float = None) -> Dict[str, Any]:
        eps = FitConfig().eps_conv if eps is None else eps
        ok = [r for r in resultados if r.error is None]
        if not resultados:
            return {"documents": 0, "failed": 0, "converged": 0, "inconsistent": 0,
                    "mean_loss": None, "mean_satisfied_fraction": None, "flagged": []}
        return {
            "documents": len(resultados),
            "failed": len(resultados) - len(ok),
            "converged": sum(1 for r in ok if r.loss <= eps),
            "inconsistent": sum(1 for r in ok if not r.consistent),
            "mean_loss": float(np.mean([r.loss for r in ok])) if ok else None,
            "mean_satisfied_fraction": float(np.mean([r.satisfied_fraction for r in ok])) if ok else None,
            "flagged": [r.doc_id for r in resultados if r.error is not None or not r.consistent or r.loss > eps],
        }


tl2rtl_service = TL2RTLService()


def fit(doc: Document, tlinks: Optional[Sequence[TLink]] = None, cfg: FitConfig = None, seed: Seed = 0) -> FitResult:
    return tl2rtl_service.fit(doc, tlinks, cfg, seed)


def fit_corpus(docs: Sequence[Document], tlink_source: Optional[Dict[str, List[TLink]]] = None,
               cfg: FitConfig = None, seed: int = 0, jobs: int = 1):
    return tl2rtl_service.fit_corpus(docs, tlink_source, cfg, seed, jobs)
