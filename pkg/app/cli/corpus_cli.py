import logging
import time

import click

from app.cli.comun import con_config, escribir_manifiesto, manejar_errores
from app.config.settings import SYNTH_CONFIG
from app.crud.corpus_crud import write_corpus
from app.schemas.corpus_schemas import SynthConfig
from app.services.generador import generate_synthetic

logger = logging.getLogger(__name__)


@click.command("generate")
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Corpus JSON-lines de salida")
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--n-docs", type=int, default=SYNTH_CONFIG["n_docs"], show_default=True)
@click.option("--entities", "entities_per_doc", type=int, default=SYNTH_CONFIG["entities_per_doc"], show_default=True)
@click.option("--density", type=float, default=SYNTH_CONFIG["density"], show_default=True,
              help="Fracción de pares de entidades con TLink, en (0, 1]")
@click.option("--dct-link-rate", type=float, default=SYNTH_CONFIG["dct_link_rate"], show_default=True)
@click.option("--min-filler", type=int, default=SYNTH_CONFIG["min_filler"], show_default=True)
@click.option("--max-filler", type=int, default=SYNTH_CONFIG["max_filler"], show_default=True)
@click.option("--context-dependent/--context-free", default=SYNTH_CONFIG["context_dependent"], show_default=True,
              help="Colocar la pista léxica fuera del span de la entidad")
@con_config
@manejar_errores
def generate(out, seed, **opciones):
    """Generar un corpus sintético con time-lines ocultos"""
    inicio = time.perf_counter()
    config = SynthConfig(**opciones)
    docs = generate_synthetic(config, seed)
    write_corpus(docs, out)
    escribir_manifiesto("generate", config.model_dump(mode="json"), out, seed=seed,
                        outputs={"corpus": out}, inicio=inicio)
    click.echo(f"{len(docs)} documentos escritos en {out}", err=True)
