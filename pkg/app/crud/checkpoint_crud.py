"""
Checkpoints JSON de los modelos directos: tipo de modelo, vocabulario,
configuración y ParamStore (tensores row-major con estado de Adam)
"""
import json
import logging
from pathlib import Path
from typing import Union

from app.errors import CheckpointError
from app.models.ctlm_model import CTLM
from app.models.representacion import BaseTimelineModel, Vocabulary
from app.models.stlm_model import STLM
from app.schemas.training_schemas import TrainConfig

logger = logging.getLogger(__name__)

FORMAT = "relatime-checkpoint"
MODEL_KINDS = {STLM.kind: STLM, CTLM.kind: CTLM}


def model_class(kind: str):
    try:
        return MODEL_KINDS[kind]
    except KeyError:
        raise CheckpointError(f"Tipo de modelo desconocido '{kind}'; opciones: {sorted(MODEL_KINDS)}")


def save_model(model: BaseTimelineModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    data = {
        "format": FORMAT,
        "kind": model.kind,
        "vocabulary": model.vocab.to_dict(),
        "config": model.cfg.model_dump(mode="json"),
        "store": model.store.to_checkpoint(),
    }
    path.write_text(json.dumps(data), encoding="utf-8")
    logger.info(f"💾 Checkpoint {model.kind} guardado en {path}")
    return path


def load_model(path: Union[str, Path], expected_vocab: Vocabulary = None) -> BaseTimelineModel:
    """
    Leer un checkpoint y reconstruir el modelo

    Raises:
        CheckpointError: formato, tipo, vocabulario o formas incompatibles
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise CheckpointError(f"No se pudo leer el checkpoint {path}: {e}") from e
    if data.get("format") != FORMAT:
        raise CheckpointError(f"{path} no es un checkpoint de modelo")

    cls = model_class(data.get("kind"))
    vocab = Vocabulary.from_dict(data["vocabulary"])
    if expected_vocab is not None and expected_vocab != vocab:
        raise CheckpointError("El vocabulario del checkpoint no coincide con el esperado")

    filas = data["store"]["tensors"].get("word_emb", {}).get("shape", [None])[0]
    if filas != len(vocab.words):
        raise CheckpointError(
            f"El encabezado de vocabulario tiene {len(vocab.words)} palabras pero word_emb tiene {filas} filas"
        )

    model = cls(vocab, TrainConfig(**data["config"]))
    model.store.load_checkpoint(data["store"])
    logger.info(f"📦 Checkpoint {model.kind} cargado desde {path}")
    return model
