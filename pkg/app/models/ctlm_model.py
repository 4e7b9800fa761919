"""
C-TLM: dos codificadores recurrentes bidireccionales independientes, uno
para los inicios y otro para las duraciones

La celda es una GRU mínima (compuerta de actualización y candidato):
    z = sigmoid(x Wz + h Uz + bz)
    c = tanh(x Wh + h Uh + bh)
    h' = h + z * (c - h)
"""
from typing import Any, Dict, List, Optional

import numpy as np

from app.models.representacion import BaseTimelineModel, EncodedBatch, uniform
from app.schemas.corpus_schemas import Document
from app.schemas.timeline_schemas import RelativeTimeline
from app.services import autograd as ag

ENCODERS = ("s", "d")
DIRECTIONS = ("fw", "bw")


class CTLM(BaseTimelineModel):
    kind = "c-tlm"

    def _init_params(self, rng: np.random.Generator) -> None:
        d, h = self.input_dim, self.cfg.rnn_units
        escala = 1.0 / np.sqrt(h)
        for enc in ENCODERS:
            for direccion in DIRECTIONS:
                p = f"rnn_{enc}_{direccion}"
                self.store.add(f"{p}_Wz", uniform(rng, escala, (d, h)))
                self.store.add(f"{p}_Uz", uniform(rng, escala, (h, h)))
                self.store.add(f"{p}_bz", np.zeros(h))
                self.store.add(f"{p}_Wh", uniform(rng, escala, (d, h)))
                self.store.add(f"{p}_Uh", uniform(rng, escala, (h, h)))
                self.store.add(f"{p}_bh", np.zeros(h))
        self.store.add("w_s", uniform(rng, self.cfg.embedding_init, 2 * h))
        self.store.add("b_s", 0.0)
        self.store.add("w_d", uniform(rng, self.cfg.embedding_init, 2 * h))
        # Duraciones iniciales por encima de d_min para que reciban gradiente
        self.store.add("b_d", 1.0)

    def _direction(self, params: Dict[str, Any], prefix: str, x, mask: np.ndarray, reverse: bool):
        """Recorre la secuencia (B, T, D) y devuelve los estados (B, T, H)"""
        b, t = mask.shape
        # Proyecciones de entrada precalculadas para todos los pasos
        xz = ag.add(ag.matmul(x, params[f"{prefix}_Wz"]), params[f"{prefix}_bz"])
        xh = ag.add(ag.matmul(x, params[f"{prefix}_Wh"]), params[f"{prefix}_bh"])
        h = np.zeros((b, self.cfg.rnn_units))
        estados: List[Any] = [None] * t
        pasos = range(t - 1, -1, -1) if reverse else range(t)
        for paso in pasos:
            z = ag.sigmoid(xz[:, paso, :] + ag.matmul(h, params[f"{prefix}_Uz"]))
            c = ag.tanh(xh[:, paso, :] + ag.matmul(h, params[f"{prefix}_Uh"]))
            nuevo = h + z * (c - h)
            # Las posiciones de relleno no modifican el estado
            m = mask[:, paso: paso + 1]
            h = h + m * (nuevo - h)
            estados[paso] = h
        return ag.stack(estados, axis=1)

    def encoder(self, params: Dict[str, Any], enc: str, x, mask: np.ndarray):
        fw = self._direction(params, f"rnn_{enc}_fw", x, mask, reverse=False)
        bw = self._direction(params, f"rnn_{enc}_bw", x, mask, reverse=True)
        return ag.concat([fw, bw], axis=2)

    def entity_values(self, params: Dict[str, Any], batch: EncodedBatch, dropout_mask: Optional[np.ndarray] = None):
        x = self.inputs(params, batch, dropout_mask)
        h_s = self.encoder(params, "s", x, batch.mask)[batch.entity_doc, batch.entity_token]
        h_d = self.encoder(params, "d", x, batch.mask)[batch.entity_doc, batch.entity_token]
        starts = ag.affine(h_s, params["w_s"], params["b_s"])
        durations = ag.affine(h_d, params["w_d"], params["b_d"])
        return starts, durations


def ctlm_predict(model: CTLM, doc: Document) -> RelativeTimeline:
    return model.predict(doc)
