"""
Representación de palabras y base común de los modelos directos

Cada token se representa como [embedding de palabra, embedding de POS, vector
booleano de atributos de la entidad que lo contiene].
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.schemas.corpus_schemas import Document, EntityKind
from app.schemas.timeline_schemas import RelativeTimeline
from app.schemas.training_schemas import TrainConfig
from app.services import autograd as ag
from app.services.timeline import compile_pairs, timeline_points

logger = logging.getLogger(__name__)

UNK = "<unk>"


def entity_features(kind: EntityKind, attrs: Dict[str, str]) -> List[str]:
    return [f"kind={kind.value}"] + [f"{k}={v}" for k, v in sorted(attrs.items())]


class Vocabulary:
    """Índices de palabras, etiquetas POS y catálogo de atributos (UNK en la posición 0)"""

    def __init__(self, words: Sequence[str], pos: Sequence[str], attrs: Sequence[str]):
        self.words = list(words)
        self.pos = list(pos)
        self.attrs = list(attrs)
        self.word_index = {w: i for i, w in enumerate(self.words)}
        self.pos_index = {p: i for i, p in enumerate(self.pos)}
        self.attr_index = {a: i for i, a in enumerate(self.attrs)}

    @classmethod
    def build(cls, docs: Sequence[Document], embeddings: Optional[Dict[str, np.ndarray]] = None) -> "Vocabulary":
        words, pos, attrs = set(), set(), set()
        for doc in docs:
            for t in doc.tokens:
                words.add(t.surface)
                if t.pos is not None:
                    pos.add(t.pos)
            for e in doc.entities:
                if e.kind != EntityKind.DCT:
                    attrs.update(entity_features(e.kind, e.attrs))
        if embeddings:
            words.update(embeddings)
        words.discard(UNK)
        pos.discard(UNK)
        vocab = cls([UNK] + sorted(words), [UNK] + sorted(pos), sorted(attrs))
        logger.info(f"🔤 Vocabulario: {len(vocab.words)} palabras, {len(vocab.pos)} POS, {len(vocab.attrs)} atributos")
        return vocab

    def to_dict(self) -> Dict[str, List[str]]:
        return {"words": self.words, "pos": self.pos, "attrs": self.attrs}

    @classmethod
    def from_dict(cls, data: Dict[str, List[str]]) -> "Vocabulary":
        return cls(data["words"], data["pos"], data["attrs"])

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.to_dict() == other.to_dict()

    def encode(self, doc: Document) -> "EncodedDoc":
        n = len(doc.tokens)
        word_ids = np.array([self.word_index.get(t.surface, 0) for t in doc.tokens], dtype=np.int64)
        pos_ids = np.array([self.pos_index.get(t.pos, 0) if t.pos else 0 for t in doc.tokens], dtype=np.int64)
        attrs = np.zeros((n, len(self.attrs)))
        ultimos = []
        for e in doc.entities:
            if e.kind == EntityKind.DCT:
                continue
            columnas = [self.attr_index[f] for f in entity_features(e.kind, e.attrs) if f in self.attr_index]
            attrs[e.span[0]: e.span[1] + 1, columnas] = 1.0
            ultimos.append(e.last_token)
        return EncodedDoc(doc=doc, word_ids=word_ids, pos_ids=pos_ids, attrs=attrs,
                          last_tokens=np.array(ultimos, dtype=np.int64))


@dataclass
class EncodedDoc:
    doc: Document
    word_ids: np.ndarray
    pos_ids: np.ndarray
    attrs: np.ndarray
    # Último token de cada entidad no-DCT, en el orden de doc.entity_order()[1:]
    last_tokens: np.ndarray


@dataclass
class EncodedBatch:
    """Documentos alineados con relleno; las entidades quedan aplanadas"""
    docs: List[EncodedDoc]
    word_ids: np.ndarray  # (B, T)
    pos_ids: np.ndarray  # (B, T)
    attrs: np.ndarray  # (B, T, A)
    mask: np.ndarray  # (B, T)
    entity_doc: np.ndarray  # (E,)
    entity_token: np.ndarray  # (E,)
    # (posición del documento, id de entidad) -> índice del punto; el DCT del documento b es b
    index: Dict[Tuple[int, str], int]

    @property
    def n_points(self) -> int:
        return len(self.docs) + len(self.entity_doc)


def encode_batch(encoded: Sequence[EncodedDoc]) -> EncodedBatch:
    b = len(encoded)
    t = max([len(e.word_ids) for e in encoded] + [1])
    a = encoded[0].attrs.shape[1] if encoded else 0
    word_ids = np.zeros((b, t), dtype=np.int64)
    pos_ids = np.zeros((b, t), dtype=np.int64)
    attrs = np.zeros((b, t, a))
    mask = np.zeros((b, t))
    entity_doc, entity_token = [], []
    index = {}
    for k, enc in enumerate(encoded):
        n = len(enc.word_ids)
        word_ids[k, :n] = enc.word_ids
        pos_ids[k, :n] = enc.pos_ids
        attrs[k, :n] = enc.attrs
        mask[k, :n] = 1.0
        orden = enc.doc.entity_order()
        index[(k, orden[0])] = k
        for ident, tok in zip(orden[1:], enc.last_tokens):
            index[(k, ident)] = b + len(entity_doc)
            entity_doc.append(k)
            entity_token.append(int(tok))
    return EncodedBatch(list(encoded), word_ids, pos_ids, attrs, mask,
                        np.array(entity_doc, dtype=np.int64), np.array(entity_token, dtype=np.int64), index)


def uniform(rng: np.random.Generator, scale: float, shape) -> np.ndarray:
    return rng.uniform(-scale, scale, size=shape)


class BaseTimelineModel:
    """
    Parámetros y predicción comunes de S-TLM y C-TLM

    Las subclases definen _init_params y entity_values, que devuelve los
    inicios y duraciones (sin recortar) de las entidades aplanadas del lote.
    """
    kind = "base"

    def __init__(self, vocab: Vocabulary, cfg: TrainConfig = None,
                 embeddings: Optional[Dict[str, np.ndarray]] = None, seed: int = None):
        self.vocab = vocab
        self.cfg = cfg or TrainConfig()
        seed = self.cfg.seed if seed is None else seed
        self.store = ag.ParamStore(seed=seed)
        rng = np.random.default_rng(seed)

        word_emb = uniform(rng, self.cfg.embedding_init, (len(vocab.words), self.cfg.word_dim))
        if embeddings:
            cargadas = 0
            for w, vec in embeddings.items():
                if w in vocab.word_index and len(vec) == self.cfg.word_dim:
                    word_emb[vocab.word_index[w]] = vec
                    cargadas += 1
            logger.info(f"🔤 {cargadas} embeddings preentrenados cargados")
        self.store.add("word_emb", word_emb)
        if self.cfg.use_pos:
            self.store.add("pos_emb", uniform(rng, self.cfg.embedding_init, (len(vocab.pos), self.cfg.pos_dim)))
        self.store.add("d_dct", 1.0)
        self._init_params(rng)
        self._cache: Dict[str, EncodedDoc] = {}

    @property
    def input_dim(self) -> int:
        return self.cfg.word_dim + (self.cfg.pos_dim if self.cfg.use_pos else 0) + len(self.vocab.attrs)

    def _init_params(self, rng: np.random.Generator) -> None:
        raise NotImplementedError

    def entity_values(self, params: Dict[str, Any], batch: EncodedBatch, dropout_mask: Optional[np.ndarray] = None):
        raise NotImplementedError

    def encode(self, doc: Document) -> EncodedDoc:
        enc = self._cache.get(doc.id)
        if enc is None or enc.doc is not doc:
            enc = self.vocab.encode(doc)
            self._cache[doc.id] = enc
        return enc

    def batch(self, docs: Sequence[Document]) -> EncodedBatch:
        return encode_batch([self.encode(d) for d in docs])

    def inputs(self, params: Dict[str, Any], batch: EncodedBatch, dropout_mask: Optional[np.ndarray] = None):
        """Representación concatenada de cada token (B, T, D)"""
        partes = [params["word_emb"][batch.word_ids]]
        if self.cfg.use_pos:
            partes.append(params["pos_emb"][batch.pos_ids])
        partes.append(batch.attrs)
        x = ag.concat(partes, axis=2)
        if dropout_mask is not None:
            x = x * dropout_mask
        return x

    def dropout_mask(self, batch: EncodedBatch, rate: float, rng: np.random.Generator) -> Optional[np.ndarray]:
        """Dropout invertido sobre la representación de entrada"""
        if rate <= 0:
            return None
        shape = batch.word_ids.shape + (self.input_dim,)
        return (rng.random(shape) >= rate) / (1.0 - rate)

    def points(self, params: Dict[str, Any], batch: EncodedBatch, dropout_mask: Optional[np.ndarray] = None):
        """Vector de puntos [inicios, fines] del lote, con los DCT primero"""
        starts, durations = self.entity_values(params, batch, dropout_mask)
        b = len(batch.docs)
        dct_starts = np.full(b, self.cfg.loss.s_dct)
        dct_durations = params["d_dct"] * np.ones(b)
        return timeline_points(
            ag.concat([dct_starts, starts]), ag.concat([dct_durations, durations]), self.cfg.loss.d_min
        )

    def compile(self, batch: EncodedBatch, items: Sequence[Tuple[int, Any]]):
        """Compilar TLinks (posición del documento, TLink) con los índices del lote"""
        pairs = [(batch.index[(k, t.source)], batch.index[(k, t.target)], t.relation) for k, t in items]
        return compile_pairs(pairs, batch.n_points)

    def predict_batch(self, docs: Sequence[Document]) -> List[RelativeTimeline]:
        batch = self.batch(docs)
        starts, durations = self.entity_values(self.store.tensors, batch)
        starts, durations = np.asarray(starts), np.asarray(durations)
        d_dct = float(self.store["d_dct"])
        salida = []
        for k, doc in enumerate(docs):
            ids = doc.entity_order()
            filas = np.flatnonzero(batch.entity_doc == k)
            salida.append(RelativeTimeline.from_values(
                ids,
                np.concatenate([[self.cfg.loss.s_dct], starts[filas]]),
                np.concatenate([[d_dct], durations[filas]]),
                ids[0], self.cfg.loss.d_min, self.cfg.loss.s_dct,
            ))
        return salida

    def predict(self, doc: Document) -> RelativeTimeline:
        return self.predict_batch([doc])[0]


def represent(model: BaseTimelineModel, doc: Document, index: int) -> np.ndarray:
    """Representación del token index: palabra, POS y atributos, en ese orden"""
    enc = model.encode(doc)
    partes = [model.store["word_emb"][enc.word_ids[index]]]
    if model.cfg.use_pos:
        partes.append(model.store["pos_emb"][enc.pos_ids[index]])
    partes.append(enc.attrs[index])
    return np.concatenate(partes)
