from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.config.settings import SYNTH_CONFIG
from app.services.pointalg import TLinkType, normalize_relation


class EntityKind(str, Enum):
    EVENT = "EVENT"
    TIMEX = "TIMEX"
    DCT = "DCT"


class Token(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int = Field(ge=0)
    surface: str = Field(min_length=1)
    pos: Optional[str] = None

    @field_validator("surface")
    @classmethod
    def minusculas(cls, v: str) -> str:
        return v.lower()


class Entity(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str = Field(min_length=1)
    kind: EntityKind
    span: Optional[Tuple[int, int]] = None
    attrs: Dict[str, str] = Field(default_factory=dict)

    @model_validator(mode="after")
    def validar_span(self):
        if self.kind == EntityKind.DCT:
            if self.span is not None:
                raise ValueError(f"El DCT '{self.id}' no puede tener span")
        elif self.span is None:
            raise ValueError(f"La entidad '{self.id}' necesita un span")
        elif self.span[0] > self.span[1]:
            raise ValueError(f"Span invertido en '{self.id}': {list(self.span)}")
        return self

    @property
    def last_token(self) -> Optional[int]:
        return None if self.span is None else self.span[1]


class TLink(BaseModel):
    model_config = ConfigDict(frozen=True)

    source: str
    target: str
    relation: TLinkType

    @field_validator("relation", mode="before")
    @classmethod
    def normalizar(cls, v):
        return normalize_relation(v)

    @model_validator(mode="after")
    def distintos(self):
        if self.source == self.target:
            raise ValueError(f"TLink reflexivo sobre '{self.source}'")
        return self


class Document(BaseModel):
    """Texto anotado: tokens, entidades temporales (con un único DCT) y TLinks"""
    model_config = ConfigDict(frozen=True)

    id: str = Field(min_length=1)
    tokens: List[Token] = Field(default_factory=list)
    entities: List[Entity] = Field(default_factory=list)
    tlinks: List[TLink] = Field(default_factory=list)
    # Time-line oculto (inicio, duración) de los documentos sintéticos
    truth: Optional[Dict[str, Tuple[float, float]]] = None

    @model_validator(mode="after")
    def validar_documento(self):
        for i, token in enumerate(self.tokens):
            if token.index != i:
                raise ValueError(f"Documento '{self.id}': índice de token {token.index} en la posición {i}")

        ids = set()
        for entity in self.entities:
            if entity.id in ids:
                raise ValueError(f"Documento '{self.id}': id de entidad duplicado '{entity.id}'")
            ids.add(entity.id)
            if entity.span is not None and entity.span[1] >= len(self.tokens):
                raise ValueError(
                    f"Documento '{self.id}': span {list(entity.span)} de '{entity.id}' fuera de los "
                    f"{len(self.tokens)} tokens"
                )

        dcts = [e.id for e in self.entities if e.kind == EntityKind.DCT]
        if len(dcts) != 1:
            raise ValueError(f"Documento '{self.id}': se esperaba exactamente un DCT y hay {len(dcts)}")

        for tlink in self.tlinks:
            for ref in (tlink.source, tlink.target):
                if ref not in ids:
                    raise ValueError(f"Documento '{self.id}': TLink con id de entidad inexistente '{ref}'")
        return self

    @property
    def dct(self) -> Entity:
        return next(e for e in self.entities if e.kind == EntityKind.DCT)

    def entity(self, entity_id: str) -> Entity:
        for e in self.entities:
            if e.id == entity_id:
                return e
        raise KeyError(entity_id)

    def surface(self, entity_id: str) -> str:
        """Forma superficial del span de la entidad ('<dct>' para el DCT)"""
        e = self.entity(entity_id)
        if e.span is None:
            return "<dct>"
        return " ".join(t.surface for t in self.tokens[e.span[0]: e.span[1] + 1])

    def entity_order(self) -> List[str]:
        """Ids con el DCT primero y luego las demás entidades en orden de anotación"""
        dct = self.dct.id
        return [dct] + [e.id for e in self.entities if e.id != dct]


class LexiconEntry(BaseModel):
    """Palabra del generador sintético con su intervalo verdadero"""
    word: str
    kind: EntityKind = EntityKind.EVENT
    start: float
    duration: float = Field(gt=0)
    attrs: Dict[str, str] = Field(default_factory=dict)


class SynthConfig(BaseModel):
    n_docs: int = SYNTH_CONFIG["n_docs"]
    entities_per_doc: int = SYNTH_CONFIG["entities_per_doc"]
    density: float = SYNTH_CONFIG["density"]
    dct_link_rate: float = SYNTH_CONFIG["dct_link_rate"]
    min_filler: int = SYNTH_CONFIG["min_filler"]
    max_filler: int = SYNTH_CONFIG["max_filler"]
    context_dependent: bool = SYNTH_CONFIG["context_dependent"]
    lexicon: Optional[List[LexiconEntry]] = None
