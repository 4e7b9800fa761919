import os
import logging
from typing import Dict, Any

# Hiper-parámetros compartidos de las funciones de pérdida
LOSS_CONFIG = {
    "m_tau": float(os.getenv("RELATIME_M_TAU", 0.025)),  # Margen del time-line
    "m_h": float(os.getenv("RELATIME_M_H", 0.1)),  # Margen del ranking loss
    "d_min": float(os.getenv("RELATIME_D_MIN", 0.1)),  # Duración mínima
    "s_dct": 0.0,  # Inicio del DCT, siempre constante
    "kind": os.getenv("RELATIME_LOSS", "tau"),
}

# Adam con sus valores por defecto
ADAM_CONFIG = {
    "lr": float(os.getenv("RELATIME_LR", 0.001)),
    "beta1": 0.9,
    "beta2": 0.999,
    "eps": 1e-8,
}

# Configuración de TL2RTL (optimización directa de inicios y duraciones)
FIT_CONFIG = {
    "max_epochs": int(os.getenv("RELATIME_FIT_EPOCHS", 10000)),
    "eps_conv": float(os.getenv("RELATIME_FIT_EPS", 1e-6)),
    "init_spread": 0.1,  # inicios uniformes en [0, n * init_spread]
    "init_duration": 1.0,
}

# Configuración de entrenamiento de S-TLM y C-TLM
TRAIN_CONFIG = {
    "batch_size": int(os.getenv("RELATIME_BATCH_SIZE", 32)),  # TLinks por mini-batch
    "patience": int(os.getenv("RELATIME_PATIENCE", 100)),
    "max_epochs": int(os.getenv("RELATIME_MAX_EPOCHS", 1000)),
    "dropout": float(os.getenv("RELATIME_DROPOUT", 0.1)),
    "dev_fraction": float(os.getenv("RELATIME_DEV_FRACTION", 0.15)),
    "word_dim": 50,
    "pos_dim": 10,
    "rnn_units": int(os.getenv("RELATIME_RNN_UNITS", 25)),
    "embedding_init": 0.05,  # uniforme en [-0.05, 0.05]
    "monitor": os.getenv("RELATIME_MONITOR", "loss"),
    "use_pos": os.getenv("RELATIME_USE_POS", "true").lower() == "true",
}

# Generador de corpus sintético
SYNTH_CONFIG = {
    "n_docs": int(os.getenv("RELATIME_SYNTH_DOCS", 10)),
    "entities_per_doc": int(os.getenv("RELATIME_SYNTH_ENTITIES", 5)),
    "density": float(os.getenv("RELATIME_SYNTH_DENSITY", 1.0)),
    "dct_link_rate": float(os.getenv("RELATIME_SYNTH_DCT_RATE", 0.5)),
    "min_filler": 1,
    "max_filler": 3,
    "context_dependent": False,
}

# Rangos de la búsqueda en grilla
GRID_CONFIG = {
    "d_min": [1.0, 0.1, 0.01],
    "m_tau": [0.0, 0.025, 0.05, 0.1],
    "dropout": [0.0, 0.1, 0.2, 0.4, 0.8],
    "rnn_units": [10, 25, 50],
}

# Configuración de logging
LOGGING_CONFIG = {
    "level": os.getenv("RELATIME_LOG_LEVEL", "INFO"),
    "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    "file": os.getenv("RELATIME_LOG_FILE"),
}

VERSION = "0.3.0"


def configurar_logging(level: str = None) -> None:
    """
    Configurar logging hacia stderr (stdout queda libre para la salida de los comandos)
    """
    handlers = [logging.StreamHandler()]
    if LOGGING_CONFIG["file"]:
        handlers.append(logging.FileHandler(LOGGING_CONFIG["file"]))
    logging.basicConfig(
        level=getattr(logging, (level or LOGGING_CONFIG["level"]).upper(), logging.INFO),
        format=LOGGING_CONFIG["format"],
        handlers=handlers,
        force=True,
    )


def get_config() -> Dict[str, Any]:
    """
    Obtener toda la configuración

    Returns:
        Diccionario con toda la configuración
    """
    return {
        "loss": LOSS_CONFIG,
        "adam": ADAM_CONFIG,
        "fit": FIT_CONFIG,
        "train": TRAIN_CONFIG,
        "synth": SYNTH_CONFIG,
        "grid": GRID_CONFIG,
        "logging": LOGGING_CONFIG,
        "version": VERSION,
    }


def validate_config() -> Dict[str, Any]:
    """
    Validar la configuración

    Returns:
        Resultado de la validación
    """
    issues = []
    warnings = []

    if LOSS_CONFIG["d_min"] <= 0:
        issues.append("RELATIME_D_MIN debe ser mayor que 0")

    if LOSS_CONFIG["m_tau"] < 0 or LOSS_CONFIG["m_h"] < 0:
        issues.append("Los márgenes m_tau y m_h no pueden ser negativos")

    if LOSS_CONFIG["kind"] not in ("tau", "ce", "hinge", "star"):
        issues.append(f"RELATIME_LOSS desconocida: {LOSS_CONFIG['kind']}")

    if not 0 < ADAM_CONFIG["lr"]:
        issues.append("RELATIME_LR debe ser positivo")

    if TRAIN_CONFIG["batch_size"] < 1:
        issues.append("RELATIME_BATCH_SIZE debe ser al menos 1")

    if TRAIN_CONFIG["patience"] >= TRAIN_CONFIG["max_epochs"]:
        issues.append("La paciencia debe ser menor que el máximo de épocas")

    if TRAIN_CONFIG["monitor"] not in ("loss", "f1"):
        issues.append(f"RELATIME_MONITOR desconocido: {TRAIN_CONFIG['monitor']}")

    if not 0 < SYNTH_CONFIG["density"] <= 1:
        issues.append("RELATIME_SYNTH_DENSITY debe estar en (0, 1]")

    # Advertencias que no impiden correr
    if LOSS_CONFIG["m_tau"] == 0:
        warnings.append("m_tau = 0: relaciones de orden y de igualdad pueden confundirse")

    if TRAIN_CONFIG["dropout"] >= 0.5:
        warnings.append("Dropout muy alto, el entrenamiento puede no converger")

    if FIT_CONFIG["max_epochs"] < 1000:
        warnings.append("Pocas épocas para TL2RTL, la pérdida puede no llegar a cero")

    return {
        "valid": len(issues) == 0,
        "issues": issues,
        "warnings": warnings,
        "total_issues": len(issues),
        "total_warnings": len(warnings),
    }
