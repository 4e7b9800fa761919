from typing import Any, Dict, List, Optional

import pandas as pd
from pydantic import BaseModel, Field


class AwarenessReport(BaseModel):
    """Temporal awareness: precisión y cobertura bajo clausura"""
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    # Tamaños de los conjuntos reducidos y aciertos, para micro-promedios
    reference_count: int = 0
    system_count: int = 0
    precision_hits: int = 0
    recall_hits: int = 0
    inconsistent: bool = False
    per_document: List[Dict[str, Any]] = Field(default_factory=list)

    def to_text(self) -> str:
        lineas = [
            f"{'precision':<12}{self.precision:>8.3f}",
            f"{'recall':<12}{self.recall:>8.3f}",
            f"{'F1':<12}{self.f1:>8.3f}",
            f"{'referencia':<12}{self.reference_count:>8d}",
            f"{'sistema':<12}{self.system_count:>8d}",
        ]
        if self.inconsistent:
            lineas.append("⚠️ conjunto del sistema inconsistente")
        return "\n".join(lineas)


class ConfusionMatrix(BaseModel):
    """Matriz de confusión gold x predicción sobre las etiquetas más frecuentes"""
    labels: List[str]
    counts: List[List[int]]
    total: int

    @property
    def percentages(self) -> List[List[float]]:
        if self.total == 0:
            return [[0.0 for _ in fila] for fila in self.counts]
        return [[100.0 * c / self.total for c in fila] for fila in self.counts]

    @property
    def covered(self) -> int:
        return sum(sum(fila) for fila in self.counts)

    def to_dataframe(self, percent: bool = True) -> pd.DataFrame:
        datos = self.percentages if percent else self.counts
        return pd.DataFrame(datos, index=self.labels, columns=self.labels)

    def to_text(self) -> str:
        df = self.to_dataframe().round(1)
        df.index.name = "gold \\ pred"
        return df.to_string()


class RunManifest(BaseModel):
    """Registro de una ejecución de la CLI"""
    subcommand: str
    config: Dict[str, Any]
    seed: Optional[int] = None
    inputs: Dict[str, Optional[str]] = Field(default_factory=dict)
    outputs: Dict[str, Optional[str]] = Field(default_factory=dict)
    version: str
    timings: Dict[str, float] = Field(default_factory=dict)
