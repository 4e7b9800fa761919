import logging
import time

import click

from app.cli.comun import (
    DEFAULT_EPOCHS,
    con_config,
    escribir_json,
    escribir_manifiesto,
    loss_config,
    loss_options,
    manejar_errores,
)
from app.crud.corpus_crud import parse_json_corpus_tolerant, read_tlinks, write_timelines
from app.schemas.training_schemas import FitConfig, FitResult
from app.services.tl2rtl import tl2rtl_service

logger = logging.getLogger(__name__)


@click.command("tl2rtl")
@click.option("--corpus", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--tlinks", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON-lines {id, tlinks}; por defecto los TLinks anotados del corpus")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Archivo de time-lines de salida")
@loss_options
@click.option("--epochs", type=int, default=DEFAULT_EPOCHS, show_default=True)
@click.option("--lr", type=float, default=None, help="Tasa de aprendizaje de Adam")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True, help="Documentos en paralelo")
@con_config
@manejar_errores
def tl2rtl(corpus, tlinks, out, loss, d_min, m_tau, epochs, lr, seed, jobs):
    """Construir time-lines que satisfagan un conjunto de TLinks"""
    inicio = time.perf_counter()
    adam = {"lr": lr} if lr is not None else {}
    cfg = FitConfig(loss=loss_config(loss, d_min, m_tau), max_epochs=epochs, adam=adam)
    docs, errores = parse_json_corpus_tolerant(corpus)
    fuente = read_tlinks(tlinks) if tlinks else None

    resultados, _ = tl2rtl_service.fit_corpus(docs, fuente, cfg, seed, jobs)
    resultados += [
        FitResult(doc_id=e["id"] or f"línea {e['line']}", error=e["error"]) for e in errores
    ]
    resultados.sort(key=lambda r: r.doc_id)
    resumen = tl2rtl_service.resumir(resultados, cfg.eps_conv)

    write_timelines([(r.doc_id, r.timeline) for r in resultados if r.timeline is not None], out)
    diagnostico = f"{out}.diagnostics.json"
    escribir_json({"summary": resumen, "documents": [r.diagnostics() for r in resultados]}, diagnostico)
    escribir_manifiesto(
        "tl2rtl", {**cfg.model_dump(mode="json"), "jobs": jobs}, out, seed=seed,
        inputs={"corpus": corpus, "tlinks": tlinks}, outputs={"timelines": out, "diagnostics": diagnostico},
        inicio=inicio,
    )
    click.echo(
        f"{resumen['converged']}/{resumen['documents']} documentos convergieron "
        f"(satisfechos: {resumen['mean_satisfied_fraction']}, con error: {resumen['failed']})",
        err=True,
    )
    if resultados and resumen["failed"] == len(resultados):
        raise click.ClickException("Todos los documentos fallaron")
