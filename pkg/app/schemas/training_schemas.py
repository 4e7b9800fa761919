from typing import Any, Dict, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.config.settings import ADAM_CONFIG, FIT_CONFIG, TRAIN_CONFIG
from app.schemas.timeline_schemas import LossConfig, RelativeTimeline


class AdamConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    lr: float = Field(default=ADAM_CONFIG["lr"], gt=0)
    beta1: float = Field(default=ADAM_CONFIG["beta1"], gt=0, lt=1)
    beta2: float = Field(default=ADAM_CONFIG["beta2"], gt=0, lt=1)
    eps: float = Field(default=ADAM_CONFIG["eps"], gt=0)


class FitConfig(BaseModel):
    """Configuración de TL2RTL"""
    model_config = ConfigDict(frozen=True)

    loss: LossConfig = Field(default_factory=LossConfig)
    adam: AdamConfig = Field(default_factory=AdamConfig)
    max_epochs: int = Field(default=FIT_CONFIG["max_epochs"], ge=1)
    eps_conv: float = Field(default=FIT_CONFIG["eps_conv"], ge=0)
    init_spread: float = Field(default=FIT_CONFIG["init_spread"], ge=0)
    init_duration: float = FIT_CONFIG["init_duration"]


class TrainConfig(BaseModel):
    """Configuración de entrenamiento de S-TLM y C-TLM"""
    model_config = ConfigDict(frozen=True)

    loss: LossConfig = Field(default_factory=LossConfig)
    adam: AdamConfig = Field(default_factory=AdamConfig)
    batch_size: int = Field(default=TRAIN_CONFIG["batch_size"], ge=1)
    patience: int = Field(default=TRAIN_CONFIG["patience"], ge=1)
    max_epochs: int = Field(default=TRAIN_CONFIG["max_epochs"], ge=1)
    dropout: float = Field(default=TRAIN_CONFIG["dropout"], ge=0, lt=1)
    dev_fraction: float = Field(default=TRAIN_CONFIG["dev_fraction"], ge=0, lt=1)
    word_dim: int = Field(default=TRAIN_CONFIG["word_dim"], ge=1)
    pos_dim: int = Field(default=TRAIN_CONFIG["pos_dim"], ge=1)
    rnn_units: int = Field(default=TRAIN_CONFIG["rnn_units"], ge=1)
    embedding_init: float = Field(default=TRAIN_CONFIG["embedding_init"], gt=0)
    monitor: Literal["loss", "f1"] = TRAIN_CONFIG["monitor"]
    use_pos: bool = TRAIN_CONFIG["use_pos"]
    seed: int = 0

    @model_validator(mode="after")
    def paciencia(self):
        if self.patience >= self.max_epochs:
            raise ValueError(
                f"patience ({self.patience}) debe ser menor que max_epochs ({self.max_epochs})"
            )
        return self


class FitResult(BaseModel):
    """Resultado de TL2RTL para un documento"""
    doc_id: str
    timeline: Optional[RelativeTimeline] = None
    loss: Optional[float] = None
    tau_loss: Optional[float] = None
    satisfied_fraction: Optional[float] = None
    consistent: Optional[bool] = None
    conflict: Optional[Dict[str, Any]] = None
    epochs: int = 0
    error: Optional[str] = None

    def diagnostics(self) -> Dict[str, Any]:
        return self.model_dump(exclude={"timeline"})
