import logging
import time
from typing import Dict, List, Optional, Tuple

import click

from app.cli.comun import con_config, escribir_json, escribir_manifiesto, loss_config, manejar_errores
from app.config.settings import LOSS_CONFIG
from app.crud.checkpoint_crud import load_model
from app.crud.corpus_crud import parse_json_corpus, read_timelines, read_tlinks
from app.schemas.corpus_schemas import Document, TLink
from app.schemas.timeline_schemas import LossConfig, RelativeTimeline
from app.services.evaluacion import (
    confusion,
    corpus_awareness,
    distance_report,
    evaluate_timelines,
    extremes_report,
    label_distribution,
    prediction_scaling_report,
)
from app.services.grafico import plot_confusion
from app.services.modelo import modelo_service
from app.services.pointalg import invert

logger = logging.getLogger(__name__)


def _una_fuente(**fuentes) -> str:
    dadas = [k for k, v in fuentes.items() if v]
    if len(dadas) != 1:
        opciones = ", ".join(f"--{k}" for k in fuentes)
        raise click.UsageError(f"Indique exactamente una de: {opciones}")
    return dadas[0]


def _timelines(timelines_path: Optional[str], checkpoint: Optional[str], docs: List[Document],
               cfg: LossConfig) -> Tuple[Dict[str, RelativeTimeline], LossConfig]:
    if checkpoint:
        model = load_model(checkpoint)
        return dict(modelo_service.predict_corpus(model, docs)), model.cfg.loss
    return read_timelines(timelines_path, cfg.d_min), cfg


def _alinear(docs: List[Document], sistema: Dict[str, List[TLink]]) -> Tuple[List[TLink], List[TLink]]:
    """Pares gold con relación en el sistema, en cualquiera de los dos sentidos"""
    gold, pred = [], []
    for doc in docs:
        relaciones = {}
        for t in sistema.get(doc.id, []):
            relaciones.setdefault((t.source, t.target), t.relation)
            relaciones.setdefault((t.target, t.source), invert(t.relation))
        for t in doc.tlinks:
            r = relaciones.get((t.source, t.target))
            if r is not None:
                gold.append(t)
                pred.append(TLink(source=t.source, target=t.target, relation=r))
    return gold, pred


@click.command("eval")
@click.option("--gold", required=True, type=click.Path(exists=True, dir_okay=False), help="Corpus de referencia")
@click.option("--timelines", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--system", type=click.Path(exists=True, dir_okay=False), default=None,
              help="TLinks del sistema (JSON-lines {id, tlinks})")
@click.option("--d-min", type=float, default=LOSS_CONFIG["d_min"], show_default=True)
@click.option("--m-tau", type=float, default=LOSS_CONFIG["m_tau"], show_default=True)
@click.option("--top-k", type=int, default=5, show_default=True)
@click.option("--json-out", type=click.Path(dir_okay=False), default=None)
@click.option("--csv-out", type=click.Path(dir_okay=False), default=None, help="Matriz de confusión en CSV")
@click.option("--plot", type=click.Path(dir_okay=False), default=None, help="Matriz de confusión en PNG")
@con_config
@manejar_errores
def evaluate(gold, timelines, checkpoint, system, d_min, m_tau, top_k, json_out, csv_out, plot):
    """Temporal awareness y matriz de confusión contra un corpus gold"""
    inicio = time.perf_counter()
    fuente = _una_fuente(timelines=timelines, checkpoint=checkpoint, system=system)
    docs = parse_json_corpus(gold)
    cfg = loss_config("tau", d_min, m_tau)

    if fuente == "system":
        sistema = read_tlinks(system)
        reporte = corpus_awareness((d.id, d.tlinks, sistema.get(d.id, [])) for d in docs)
        gold_tlinks, pred_tlinks = _alinear(docs, sistema)
    else:
        tls, cfg = _timelines(timelines, checkpoint, docs, cfg)
        reporte, gold_tlinks, pred_tlinks = evaluate_timelines(docs, tls, cfg)
    cm = confusion(gold_tlinks, pred_tlinks, top_k)

    click.echo(reporte.to_text())
    click.echo("")
    click.echo(f"Matriz de confusión (% de {cm.total} TLinks, cubierto {cm.covered})")
    click.echo(cm.to_text())

    salidas = {}
    if json_out:
        escribir_json({"report": reporte.model_dump(), "confusion": {**cm.model_dump(), "percentages": cm.percentages}},
                      json_out)
        salidas["json"] = json_out
    if csv_out:
        cm.to_dataframe().to_csv(csv_out, float_format="%.4f")
        salidas["csv"] = csv_out
    if plot:
        plot_confusion(cm, plot)
        salidas["plot"] = plot
    if salidas:
        escribir_manifiesto(
            "eval", {"source": fuente, "top_k": top_k, "loss": cfg.model_dump(mode="json")},
            next(iter(salidas.values())), inputs={"gold": gold, fuente: timelines or checkpoint or system},
            outputs=salidas, inicio=inicio,
        )


@click.command("analyze")
@click.option("--corpus", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--timelines", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--d-min", type=float, default=LOSS_CONFIG["d_min"], show_default=True)
@click.option("--m-tau", type=float, default=LOSS_CONFIG["m_tau"], show_default=True)
@click.option("-k", "--top", "k", type=int, default=5, show_default=True)
@click.option("--scaling", is_flag=True, default=False, help="Medir el tiempo de predicción (requiere --checkpoint)")
@click.option("--sizes", type=int, multiple=True, default=(40, 80), show_default=True)
@click.option("--json-out", type=click.Path(dir_okay=False), default=None)
@con_config
@manejar_errores
def analyze(corpus, timelines, checkpoint, d_min, m_tau, k, scaling, sizes, json_out):
    """Extremos de inicio y duración, distancias en tokens y distribución de etiquetas"""
    inicio = time.perf_counter()
    fuente = _una_fuente(timelines=timelines, checkpoint=checkpoint)
    if scaling and not checkpoint:
        raise click.UsageError("--scaling requiere --checkpoint")
    docs = parse_json_corpus(corpus)
    tls, cfg = _timelines(timelines, checkpoint, docs, loss_config("tau", d_min, m_tau))

    extremos = extremes_report(docs, tls, k)
    distancias = distance_report(docs, tls, cfg)
    etiquetas = label_distribution(docs)

    for nombre, filas in extremos.items():
        click.echo(f"{nombre}:")
        for surface, valor in filas:
            click.echo(f"  {surface:<20}{valor:>10.3f}")
    click.echo("")
    click.echo(f"distancia media satisfechos: {distancias['satisfied_mean']} ({distancias['satisfied_count']})")
    click.echo(f"distancia media violados:    {distancias['violated_mean']} ({distancias['violated_count']})")
    click.echo("")
    click.echo(etiquetas.to_string(index=False, float_format=lambda v: f"{v:.3f}"))

    salida = {"extremes": extremos, "distances": distancias, "labels": etiquetas.to_dict(orient="records")}
    if scaling:
        escala = prediction_scaling_report(load_model(checkpoint), sizes)
        click.echo("")
        click.echo(escala.to_string(index=False))
        salida["scaling"] = escala.to_dict(orient="records")
    if json_out:
        escribir_json(salida, json_out)
        escribir_manifiesto(
            "analyze", {"source": fuente, "k": k, "scaling": scaling, "sizes": list(sizes),
                        "loss": cfg.model_dump(mode="json")},
            json_out, inputs={"corpus": corpus, fuente: timelines or checkpoint}, outputs={"json": json_out},
            inicio=inicio,
        )
