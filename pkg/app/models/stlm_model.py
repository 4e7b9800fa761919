"""
S-TLM: cada entidad se ubica de forma independiente a partir de la
representación de su último token
"""
from typing import Any, Dict, Optional

import numpy as np

from app.models.representacion import BaseTimelineModel, EncodedBatch, uniform
from app.schemas.corpus_schemas import Document
from app.schemas.timeline_schemas import RelativeTimeline
from app.services import autograd as ag


class STLM(BaseTimelineModel):
    kind = "s-tlm"

    def _init_params(self, rng: np.random.Generator) -> None:
        d = self.input_dim
        self.store.add("w_s", uniform(rng, self.cfg.embedding_init, d))
        self.store.add("b_s", 0.0)
        self.store.add("w_d", uniform(rng, self.cfg.embedding_init, d))
        # Duraciones iniciales por encima de d_min para que reciban gradiente
        self.store.add("b_d", 1.0)

    def entity_values(self, params: Dict[str, Any], batch: EncodedBatch, dropout_mask: Optional[np.ndarray] = None):
        x = self.inputs(params, batch, dropout_mask)
        ultimos = x[batch.entity_doc, batch.entity_token]
        starts = ag.affine(ultimos, params["w_s"], params["b_s"])
        durations = ag.affine(ultimos, params["w_d"], params["b_d"])
        return starts, durations


def stlm_predict(model: STLM, doc: Document) -> RelativeTimeline:
    return model.predict(doc)
