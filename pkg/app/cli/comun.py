"""
Piezas compartidas por los subcomandos: capas de configuración, manejo de
errores, manifiestos y opciones comunes
"""
import functools
import json
import logging
import time
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import click
from click.core import ParameterSource
from pydantic import ValidationError

from app.config.settings import FIT_CONFIG, LOSS_CONFIG, VERSION
from app.errors import ConfigError, RelatimeError
from app.schemas.report_schemas import RunManifest
from app.schemas.timeline_schemas import LossConfig, LossKind

logger = logging.getLogger(__name__)

LOSS_CHOICES = [k.value for k in LossKind]
DEFAULT_EPOCHS = FIT_CONFIG["max_epochs"]


def aplicar_config(ctx: click.Context, params: Dict[str, Any], path: str) -> Dict[str, Any]:
    """
    Completar con el archivo JSON las opciones que quedaron en su valor por defecto

    Las opciones pasadas explícitamente ganan sobre el archivo.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise click.UsageError(f"Archivo de configuración inválido {path}: {e.msg}")
    if not isinstance(data, dict):
        raise click.UsageError(f"El archivo de configuración {path} debe contener un objeto JSON")
    for clave, valor in data.items():
        nombre = clave.replace("-", "_")
        if nombre not in params:
            raise click.UsageError(f"Clave desconocida en {path}: '{clave}'")
        if ctx.get_parameter_source(nombre) in (ParameterSource.DEFAULT, ParameterSource.DEFAULT_MAP, None):
            params[nombre] = valor
    return params


def con_config(f: Callable) -> Callable:
    """Agrega --config al comando"""

    @click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
                  help="JSON con valores para las opciones no indicadas en la línea de comandos")
    @functools.wraps(f)
    def wrapper(config_path: Optional[str] = None, **kwargs):
        if config_path:
            kwargs = aplicar_config(click.get_current_context(), kwargs, config_path)
        return f(**kwargs)

    return wrapper


def manejar_errores(f: Callable) -> Callable:
    """Errores de configuración -> exit 2; fallas de ejecución -> exit 1"""

    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except (ConfigError, ValidationError) as e:
            logger.error(f"❌ Configuración inválida: {str(e)}")
            raise click.UsageError(str(e))
        except (RelatimeError, OSError) as e:
            logger.error(f"❌ {str(e)}")
            raise click.ClickException(str(e))

    return wrapper


def loss_options(f: Callable) -> Callable:
    f = click.option("--m-tau", type=float, default=LOSS_CONFIG["m_tau"], show_default=True,
                     help="Margen del time-line")(f)
    f = click.option("--d-min", type=float, default=LOSS_CONFIG["d_min"], show_default=True,
                     help="Duración mínima")(f)
    f = click.option("--loss", type=click.Choice(LOSS_CHOICES), default=LOSS_CONFIG["kind"], show_default=True,
                     help="Función de pérdida")(f)
    return f


def loss_config(loss: str, d_min: float, m_tau: float) -> LossConfig:
    return LossConfig(kind=loss, d_min=d_min, m_tau=m_tau)


def manifest_path(out: str) -> Path:
    return Path(f"{out}.manifest.json")


def escribir_manifiesto(subcommand: str, config: Dict[str, Any], out: str, seed: Optional[int] = None,
                        inputs: Optional[Dict[str, Optional[str]]] = None,
                        outputs: Optional[Dict[str, Optional[str]]] = None,
                        inicio: Optional[float] = None) -> Path:
    manifiesto = RunManifest(
        subcommand=subcommand,
        config=json.loads(json.dumps(config, default=str)),
        seed=seed,
        inputs=inputs or {},
        outputs=outputs or {},
        version=VERSION,
        timings={"wall_seconds": time.perf_counter() - inicio} if inicio is not None else {},
    )
    path = manifest_path(out)
    path.write_text(manifiesto.model_dump_json(indent=2), encoding="utf-8")
    logger.info(f"💾 Manifiesto escrito en {path}")
    return path


def escribir_json(data: Any, path: str) -> Path:
    path = Path(path)
    path.write_text(json.dumps(data, indent=2, ensure_ascii=False, default=str) + "\n", encoding="utf-8")
    return path

