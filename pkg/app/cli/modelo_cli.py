import json
import logging
import time
from pathlib import Path

import click

from app.cli.comun import con_config, escribir_json, escribir_manifiesto, loss_config, loss_options, manejar_errores
from app.config.settings import ADAM_CONFIG, GRID_CONFIG, TRAIN_CONFIG
from app.crud.checkpoint_crud import MODEL_KINDS, load_model, save_model
from app.crud.corpus_crud import load_embeddings, parse_json_corpus, write_timelines, write_tlinks
from app.errors import ConfigError
from app.schemas.training_schemas import TrainConfig
from app.services.modelo import modelo_service
from app.services.timeline import derive_all_tlinks

logger = logging.getLogger(__name__)

KIND_CHOICES = sorted(MODEL_KINDS)


def train_options(f):
    opciones = [
        click.option("--kind", type=click.Choice(KIND_CHOICES), default="c-tlm", show_default=True),
        click.option("--dev", type=click.Path(exists=True, dir_okay=False), default=None,
                     help="Corpus de dev; por defecto se separa --dev-fraction del entrenamiento"),
        click.option("--embeddings", type=click.Path(exists=True, dir_okay=False), default=None,
                     help="Vectores de palabras en formato texto"),
        click.option("--epochs", type=int, default=TRAIN_CONFIG["max_epochs"], show_default=True),
        click.option("--patience", type=int, default=TRAIN_CONFIG["patience"], show_default=True),
        click.option("--batch-size", type=int, default=TRAIN_CONFIG["batch_size"], show_default=True),
        click.option("--dropout", type=float, default=TRAIN_CONFIG["dropout"], show_default=True),
        click.option("--dev-fraction", type=float, default=TRAIN_CONFIG["dev_fraction"], show_default=True),
        click.option("--rnn-units", type=int, default=TRAIN_CONFIG["rnn_units"], show_default=True),
        click.option("--word-dim", type=int, default=TRAIN_CONFIG["word_dim"], show_default=True),
        click.option("--monitor", type=click.Choice(["loss", "f1"]), default=TRAIN_CONFIG["monitor"],
                     show_default=True),
        click.option("--pos/--no-pos", "use_pos", default=TRAIN_CONFIG["use_pos"], show_default=True),
        click.option("--lr", type=float, default=ADAM_CONFIG["lr"], show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
    ]
    for opcion in reversed(opciones):
        f = opcion(f)
    return loss_options(f)


def _train_config(o) -> TrainConfig:
    return TrainConfig(
        loss=loss_config(o["loss"], o["d_min"], o["m_tau"]),
        adam={"lr": o["lr"]},
        batch_size=o["batch_size"],
        patience=o["patience"],
        max_epochs=o["epochs"],
        dropout=o["dropout"],
        dev_fraction=o["dev_fraction"],
        word_dim=o["word_dim"],
        rnn_units=o["rnn_units"],
        monitor=o["monitor"],
        use_pos=o["use_pos"],
        seed=o["seed"],
    )


def _datos(o, cfg: TrainConfig):
    corpus = parse_json_corpus(o["corpus"])
    dev = parse_json_corpus(o["dev"]) if o["dev"] else None
    embeddings = load_embeddings(o["embeddings"], cfg.word_dim) if o["embeddings"] else None
    return corpus, dev, embeddings


@click.command("train")
@click.option("--corpus", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Checkpoint de salida")
@train_options
@con_config
@manejar_errores
def train(**o):
    """Entrenar S-TLM o C-TLM"""
    inicio = time.perf_counter()
    cfg = _train_config(o)
    corpus, dev, embeddings = _datos(o, cfg)
    resultado = modelo_service.train(o["kind"], corpus, cfg, dev, embeddings)

    save_model(resultado.model, o["out"])
    log_path = f"{o['out']}.log.csv"
    resultado.log.to_csv(log_path, index=False, float_format="%.6f")
    escribir_manifiesto(
        "train", {"kind": o["kind"], **cfg.model_dump(mode="json")}, o["out"], seed=cfg.seed,
        inputs={"corpus": o["corpus"], "dev": o["dev"], "embeddings": o["embeddings"]},
        outputs={"checkpoint": o["out"], "log": log_path}, inicio=inicio,
    )
    click.echo(
        f"mejor época {resultado.best_epoch}: dev loss {resultado.dev_loss:.4f}, dev F1 {resultado.dev_f1:.3f}"
        + (" (parada temprana)" if resultado.stopped_early else ""),
        err=True,
    )


@click.command("predict")
@click.option("--checkpoint", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--corpus", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Archivo de time-lines de salida")
@click.option("--all-pairs", is_flag=True, default=False,
              help="Escribir también los TLinks derivados para todos los pares en <out>.tlinks.jsonl")
@click.option("--batch-size", type=int, default=32, show_default=True)
@con_config
@manejar_errores
def predict(checkpoint, corpus, out, all_pairs, batch_size):
    """Predecir un time-line por documento con un modelo entrenado"""
    inicio = time.perf_counter()
    model = load_model(checkpoint)
    docs = parse_json_corpus(corpus)
    timelines = modelo_service.predict_corpus(model, docs, batch_size)
    write_timelines(timelines, out)
    salidas = {"timelines": out}
    if all_pairs:
        salidas["tlinks"] = f"{out}.tlinks.jsonl"
        write_tlinks([(doc_id, derive_all_tlinks(tl, model.cfg.loss)) for doc_id, tl in timelines], salidas["tlinks"])
    escribir_manifiesto(
        "predict", {"kind": model.kind, "all_pairs": all_pairs, "batch_size": batch_size,
                    **model.cfg.model_dump(mode="json")},
        out, seed=model.cfg.seed, inputs={"checkpoint": checkpoint, "corpus": corpus}, outputs=salidas, inicio=inicio,
    )
    click.echo(f"{len(timelines)} time-lines escritos en {out}", err=True)


def _grilla(grid_file, d_min_values, m_tau_values, dropout_values, rnn_values):
    grids = {}
    if grid_file:
        try:
            grids = json.loads(Path(grid_file).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"Grilla inválida en {grid_file}: {e.msg}") from e
        if not isinstance(grids, dict):
            raise ConfigError(f"{grid_file} debe contener un objeto JSON clave -> lista de valores")
    for clave, valores in (("d_min", d_min_values), ("m_tau", m_tau_values),
                           ("dropout", dropout_values), ("rnn_units", rnn_values)):
        if valores:
            grids[clave] = list(valores)
    return grids or dict(GRID_CONFIG)


@click.command("grid")
@click.option("--corpus", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Tabla CSV de resultados")
@click.option("--grid", "grid_file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON con las listas de valores; por defecto los rangos completos")
@click.option("--grid-d-min", "d_min_values", type=float, multiple=True)
@click.option("--grid-m-tau", "m_tau_values", type=float, multiple=True)
@click.option("--grid-dropout", "dropout_values", type=float, multiple=True)
@click.option("--grid-rnn-units", "rnn_values", type=int, multiple=True)
@click.option("--save-best", type=click.Path(dir_okay=False), default=None, help="Checkpoint del mejor modelo")
@train_options
@con_config
@manejar_errores
def grid(**o):
    """Búsqueda en grilla ordenada por F1 de dev"""
    inicio = time.perf_counter()
    cfg = _train_config(o)
    grids = _grilla(o["grid_file"], o["d_min_values"], o["m_tau_values"], o["dropout_values"], o["rnn_values"])
    corpus, dev, embeddings = _datos(o, cfg)
    resultado = modelo_service.grid_search(o["kind"], corpus, grids, cfg, dev, embeddings)

    resultado.table.to_csv(o["out"], index=False, float_format="%.6f")
    best_path = f"{o['out']}.best.json"
    escribir_json({"best": resultado.best, "dev_f1": resultado.best_result.dev_f1}, best_path)
    salidas = {"table": o["out"], "best": best_path}
    if o["save_best"]:
        save_model(resultado.best_result.model, o["save_best"])
        salidas["checkpoint"] = o["save_best"]
    escribir_manifiesto(
        "grid", {"kind": o["kind"], "grids": grids, **cfg.model_dump(mode="json")}, o["out"], seed=cfg.seed,
        inputs={"corpus": o["corpus"], "dev": o["dev"], "embeddings": o["embeddings"]}, outputs=salidas,
        inicio=inicio,
    )
    click.echo(resultado.table.to_string(index=False))
    click.echo(f"mejor: {resultado.best} (dev F1 {resultado.best_result.dev_f1:.3f})", err=True)
