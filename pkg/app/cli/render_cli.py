import logging
import time
from pathlib import Path

import click

from app.cli.comun import con_config, escribir_manifiesto, manejar_errores
from app.config.settings import LOSS_CONFIG
from app.crud.corpus_crud import parse_json_corpus, read_timelines
from app.errors import EntityUniverseError
from app.services.grafico import plot_timeline
from app.services.timeline import render as render_timeline

logger = logging.getLogger(__name__)


@click.command("render")
@click.option("--timelines", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--corpus", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Corpus para etiquetar las barras con la forma de superficie")
@click.option("--doc", "doc_id", default=None, help="Documento a dibujar; por defecto el primero")
@click.option("--format", "fmt", type=click.Choice(["text", "svg", "png"]), default="text", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Archivo de salida (obligatorio para png)")
@click.option("--width", type=int, default=60, show_default=True)
@click.option("--d-min", type=float, default=LOSS_CONFIG["d_min"], show_default=True)
@con_config
@manejar_errores
def render(timelines, corpus, doc_id, fmt, out, width, d_min):
    """Dibujar un time-line como barras horizontales"""
    inicio = time.perf_counter()
    if fmt == "png" and not out:
        raise click.UsageError("--format png requiere --out")
    tls = read_timelines(timelines, d_min)
    if not tls:
        raise click.ClickException(f"{timelines} no contiene time-lines")
    doc_id = doc_id or next(iter(tls))
    if doc_id not in tls:
        raise EntityUniverseError(f"No hay time-line para el documento '{doc_id}'")
    doc = None
    if corpus:
        doc = next((d for d in parse_json_corpus(corpus) if d.id == doc_id), None)
    tl = tls[doc_id]

    if fmt == "png":
        plot_timeline(tl, doc, out)
    else:
        texto = render_timeline(tl, doc, fmt, width)
        if out:
            Path(out).write_text(texto, encoding="utf-8")
        else:
            click.echo(texto, nl=False)
    if out:
        escribir_manifiesto("render", {"doc": doc_id, "format": fmt, "width": width, "d_min": d_min}, out,
                            inputs={"timelines": timelines, "corpus": corpus}, outputs={fmt: out}, inicio=inicio)
