from dotenv import load_dotenv

# Cargar variables de entorno al inicio
load_dotenv()

import logging  # noqa: E402

import click  # noqa: E402

from app.cli import corpus_cli, evaluacion_cli, modelo_cli, render_cli, tl2rtl_cli  # noqa: E402
from app.config.settings import VERSION, configurar_logging, validate_config  # noqa: E402

logger = logging.getLogger(__name__)


@click.group()
@click.version_option(VERSION, prog_name="relatime")
@click.option("--log-level", default=None, help="Nivel de logging (por defecto RELATIME_LOG_LEVEL)")
def cli(log_level):
    """RelaTime: time-lines relativos a partir de texto anotado"""
    configurar_logging(log_level)
    validacion = validate_config()
    for aviso in validacion["warnings"]:
        logger.warning(f"⚠️ {aviso}")
    if not validacion["valid"]:
        raise click.UsageError("Configuración inválida: " + "; ".join(validacion["issues"]))


# Registrar comandos
cli.add_command(corpus_cli.generate)
cli.add_command(tl2rtl_cli.tl2rtl)
cli.add_command(modelo_cli.train)
cli.add_command(modelo_cli.predict)
cli.add_command(evaluacion_cli.evaluate)
cli.add_command(evaluacion_cli.analyze)
cli.add_command(render_cli.render)
cli.add_command(modelo_cli.grid)


if __name__ == "__main__":
    cli()
