from enum import Enum
from typing import Dict, List, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.config.settings import LOSS_CONFIG


class LossKind(str, Enum):
    TAU = "tau"
    CE = "ce"
    HINGE = "hinge"
    STAR = "star"


class LossConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    m_tau: float = Field(default=LOSS_CONFIG["m_tau"], ge=0)
    m_h: float = Field(default=LOSS_CONFIG["m_h"], ge=0)
    d_min: float = Field(default=LOSS_CONFIG["d_min"], gt=0)
    s_dct: float = LOSS_CONFIG["s_dct"]
    kind: LossKind = LossKind(LOSS_CONFIG["kind"])


class TimelineEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    start: float
    duration: float


class RelativeTimeline(BaseModel):
    """
    Inicio y duración (sin recortar) por entidad

    El fin se calcula como start + max(duration, d_min).
    """
    model_config = ConfigDict(frozen=True)

    entries: Dict[str, TimelineEntry]
    dct_id: str
    d_min: float = Field(default=LOSS_CONFIG["d_min"], gt=0)
    s_dct: float = LOSS_CONFIG["s_dct"]

    @model_validator(mode="after")
    def validar_dct(self):
        if self.dct_id not in self.entries:
            raise ValueError(f"El time-line no contiene el DCT '{self.dct_id}'")
        if self.entries[self.dct_id].start != self.s_dct:
            raise ValueError(
                f"El DCT debe empezar en {self.s_dct}, no en {self.entries[self.dct_id].start}"
            )
        return self

    @classmethod
    def from_values(cls, ids: List[str], starts, durations, dct_id: str, d_min: float,
                    s_dct: float = LOSS_CONFIG["s_dct"]) -> "RelativeTimeline":
        entries = {
            i: TimelineEntry(start=float(s), duration=float(d))
            for i, s, d in zip(ids, starts, durations)
        }
        return cls(entries=entries, dct_id=dct_id, d_min=d_min, s_dct=s_dct)

    @property
    def ids(self) -> List[str]:
        return list(self.entries)

    def start(self, entity_id: str) -> float:
        return self.entries[entity_id].start

    def duration(self, entity_id: str) -> float:
        return self.entries[entity_id].duration

    def end(self, entity_id: str) -> float:
        entry = self.entries[entity_id]
        return entry.start + max(entry.duration, self.d_min)

    def interval(self, entity_id: str) -> Tuple[float, float]:
        return self.start(entity_id), self.end(entity_id)
