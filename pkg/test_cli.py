"""
Pruebas de la CLI con CliRunner
"""
import json

import pytest
from click.testing import CliRunner

from app.crud.corpus_crud import parse_json_corpus, write_corpus, write_timelines
from app.main import cli
from app.services.generador import truth_timeline

ENTRENAMIENTO_CORTO = ["--epochs", "3", "--patience", "2", "--word-dim", "4", "--rnn-units", "3", "--seed", "5"]


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def corpus_file(runner, tmp_path):
    path = tmp_path / "corpus.jsonl"
    result = runner.invoke(cli, ["generate", "--out", str(path), "--seed", "3", "--n-docs", "3",
                                 "--entities", "4", "--density", "1.0"])
    assert result.exit_code == 0, result.output
    return path


def test_generate_determinista(runner, tmp_path):
    rutas = [tmp_path / "a.jsonl", tmp_path / "b.jsonl"]
    for ruta in rutas:
        result = runner.invoke(cli, ["generate", "--out", str(ruta), "--seed", "11", "--n-docs", "4"])
        assert result.exit_code == 0, result.output
    assert rutas[0].read_text(encoding="utf-8") == rutas[1].read_text(encoding="utf-8")
    assert len(rutas[0].read_text(encoding="utf-8").splitlines()) == 4
    manifiesto = json.loads((tmp_path / "a.jsonl.manifest.json").read_text(encoding="utf-8"))
    assert manifiesto["subcommand"] == "generate"
    assert manifiesto["seed"] == 11


@pytest.mark.parametrize("densidad", ["0", "1.5"])
def test_generate_densidad_invalida(runner, tmp_path, densidad):
    result = runner.invoke(cli, ["generate", "--out", str(tmp_path / "c.jsonl"), "--density", densidad])
    assert result.exit_code == 2
    assert not (tmp_path / "c.jsonl").exists()


def test_config_json_completa_opciones(runner, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"n_docs": 2, "seed": 9}), encoding="utf-8")
    out = tmp_path / "c.jsonl"
    result = runner.invoke(cli, ["generate", "--out", str(out), "--seed", "4", "--config", str(config)])
    assert result.exit_code == 0, result.output
    assert len(out.read_text(encoding="utf-8").splitlines()) == 2
    manifiesto = json.loads((tmp_path / "c.jsonl.manifest.json").read_text(encoding="utf-8"))
    assert manifiesto["seed"] == 4


def test_config_json_clave_desconocida(runner, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"colour": "red"}), encoding="utf-8")
    result = runner.invoke(cli, ["generate", "--out", str(tmp_path / "c.jsonl"), "--config", str(config)])
    assert result.exit_code == 2
    assert "colour" in result.output


def test_tl2rtl_escribe_timelines_y_diagnostico(runner, tmp_path, corpus_file):
    out = tmp_path / "tl.jsonl"
    result = runner.invoke(cli, ["tl2rtl", "--corpus", str(corpus_file), "--out", str(out), "--epochs", "300"])
    assert result.exit_code == 0, result.output
    lineas = [json.loads(l) for l in out.read_text(encoding="utf-8").splitlines()]
    assert len(lineas) == 3
    assert all(set(l) == {"id", "dct", "timeline"} for l in lineas)
    diagnostico = json.loads((tmp_path / "tl.jsonl.diagnostics.json").read_text(encoding="utf-8"))
    assert diagnostico["summary"]["documents"] == 3
    assert (tmp_path / "tl.jsonl.manifest.json").exists()


def test_tl2rtl_perdida_desconocida(runner, tmp_path, corpus_file):
    result = runner.invoke(cli, ["tl2rtl", "--corpus", str(corpus_file), "--out", str(tmp_path / "tl.jsonl"),
                                 "--loss", "l2"])
    assert result.exit_code == 2


def test_tl2rtl_corpus_inexistente(runner, tmp_path):
    result = runner.invoke(cli, ["tl2rtl", "--corpus", str(tmp_path / "no.jsonl"), "--out", str(tmp_path / "x")])
    assert result.exit_code == 2


def test_eval_gold_contra_si_mismo(runner, tmp_path, corpus_file):
    json_out = tmp_path / "eval.json"
    result = runner.invoke(cli, ["eval", "--gold", str(corpus_file), "--system", str(corpus_file),
                                 "--json-out", str(json_out)])
    assert result.exit_code == 0, result.output
    assert "F1" in result.output
    assert "1.000" in result.output
    reporte = json.loads(json_out.read_text(encoding="utf-8"))
    assert reporte["report"]["f1"] == 1.0


def test_eval_requiere_una_fuente(runner, corpus_file):
    result = runner.invoke(cli, ["eval", "--gold", str(corpus_file)])
    assert result.exit_code == 2
    result = runner.invoke(cli, ["eval", "--gold", str(corpus_file), "--system", str(corpus_file),
                                 "--timelines", str(corpus_file)])
    assert result.exit_code == 2


def test_render_texto(runner, tmp_path, make_timeline):
    path = write_timelines([("d1", make_timeline({"a": (2.0, 1.0), "b": (-1.0, 0.5)}))], tmp_path / "tl.jsonl")
    result = runner.invoke(cli, ["render", "--timelines", str(path)])
    assert result.exit_code == 0, result.output
    filas = [f for f in result.output.splitlines() if f.count("|") == 2]
    assert [f.split()[0] for f in filas] == ["b", "*t0", "a"]


def test_render_documento_desconocido(runner, tmp_path, make_timeline):
    path = write_timelines([("d1", make_timeline({"a": (0.0, 1.0)}))], tmp_path / "tl.jsonl")
    result = runner.invoke(cli, ["render", "--timelines", str(path), "--doc", "otro"])
    assert result.exit_code == 1


def test_render_png_requiere_out(runner, tmp_path, make_timeline):
    path = write_timelines([("d1", make_timeline({"a": (0.0, 1.0)}))], tmp_path / "tl.jsonl")
    result = runner.invoke(cli, ["render", "--timelines", str(path), "--format", "png"])
    assert result.exit_code == 2


def test_render_con_corpus(runner, tmp_path, make_doc, make_timeline):
    doc = make_doc(["a"], words={"a": "slept"})
    corpus = write_corpus([doc], tmp_path / "c.jsonl")
    path = write_timelines([("d1", make_timeline({"a": (0.0, 1.0)}))], tmp_path / "tl.jsonl")
    result = runner.invoke(cli, ["render", "--timelines", str(path), "--corpus", str(corpus)])
    assert result.exit_code == 0, result.output
    assert "a slept" in result.output


def test_eval_manifiesto_solo_con_salidas(runner, tmp_path, corpus_file):
    result = runner.invoke(cli, ["eval", "--gold", str(corpus_file), "--system", str(corpus_file)])
    assert result.exit_code == 0, result.output
    assert [p.name for p in tmp_path.glob("*.manifest.json")] == ["corpus.jsonl.manifest.json"]
    csv_out = tmp_path / "cm.csv"
    result = runner.invoke(cli, ["eval", "--gold", str(corpus_file), "--system", str(corpus_file),
                                 "--csv-out", str(csv_out)])
    assert result.exit_code == 0, result.output
    manifiesto = json.loads((tmp_path / "cm.csv.manifest.json").read_text(encoding="utf-8"))
    assert manifiesto["subcommand"] == "eval"
    assert manifiesto["outputs"] == {"csv": str(csv_out)}


# Modelos directos


@pytest.fixture
def corpus_modelos(runner, tmp_path):
    path = tmp_path / "modelos.jsonl"
    result = runner.invoke(cli, ["generate", "--out", str(path), "--seed", "8", "--n-docs", "6",
                                 "--entities", "4", "--density", "1.0"])
    assert result.exit_code == 0, result.output
    return path


def _entrenar(runner, corpus, out, *extra):
    result = runner.invoke(cli, ["train", "--corpus", str(corpus), "--out", str(out), "--kind", "s-tlm",
                                 *ENTRENAMIENTO_CORTO, *extra])
    assert result.exit_code == 0, result.output
    return out


def test_train_escribe_checkpoint_y_log(runner, tmp_path, corpus_modelos):
    out = _entrenar(runner, corpus_modelos, tmp_path / "modelo.json")
    assert json.loads(out.read_text(encoding="utf-8"))["format"] == "relatime-checkpoint"
    log = (tmp_path / "modelo.json.log.csv").read_text(encoding="utf-8").splitlines()
    assert log[0] == "epoch,train_loss,dev_loss,dev_f1"
    assert len(log) == 4
    manifiesto = json.loads((tmp_path / "modelo.json.manifest.json").read_text(encoding="utf-8"))
    assert manifiesto["subcommand"] == "train"
    assert manifiesto["seed"] == 5


def test_train_epocas_y_paciencia_invalidas(runner, tmp_path, corpus_modelos):
    result = runner.invoke(cli, ["train", "--corpus", str(corpus_modelos), "--out", str(tmp_path / "m.json"),
                                 "--epochs", "3", "--patience", "3"])
    assert result.exit_code == 2
    assert not (tmp_path / "m.json").exists()


def test_predict_escribe_timelines_y_todos_los_pares(runner, tmp_path, corpus_modelos):
    modelo = _entrenar(runner, corpus_modelos, tmp_path / "modelo.json")
    out = tmp_path / "pred.jsonl"
    result = runner.invoke(cli, ["predict", "--checkpoint", str(modelo), "--corpus", str(corpus_modelos),
                                 "--out", str(out), "--all-pairs"])
    assert result.exit_code == 0, result.output
    lineas = [json.loads(l) for l in out.read_text(encoding="utf-8").splitlines()]
    assert [l["id"] for l in lineas] == [d.id for d in parse_json_corpus(corpus_modelos)]
    pares = [json.loads(l) for l in (tmp_path / "pred.jsonl.tlinks.jsonl").read_text(encoding="utf-8").splitlines()]
    assert all(len(p["tlinks"]) == 5 * 4 // 2 for p in pares)


def test_grid_pequena(runner, tmp_path, corpus_modelos):
    out = tmp_path / "grilla.csv"
    mejor = tmp_path / "mejor.json"
    result = runner.invoke(cli, ["grid", "--corpus", str(corpus_modelos), "--out", str(out), "--kind", "s-tlm",
                                 "--grid-m-tau", "0.0", "--grid-m-tau", "0.025", "--grid-dropout", "0.0",
                                 "--save-best", str(mejor), *ENTRENAMIENTO_CORTO])
    assert result.exit_code == 0, result.output
    filas = out.read_text(encoding="utf-8").splitlines()
    assert len(filas) == 3
    assert "dev_f1" in filas[0].split(",")
    resumen = json.loads((tmp_path / "grilla.csv.best.json").read_text(encoding="utf-8"))
    assert resumen["best"]["m_tau"] in (0.0, 0.025)
    assert mejor.exists()


def test_grid_clave_desconocida(runner, tmp_path, corpus_modelos):
    grilla = tmp_path / "g.json"
    grilla.write_text(json.dumps({"lr": [0.1]}), encoding="utf-8")
    result = runner.invoke(cli, ["grid", "--corpus", str(corpus_modelos), "--out", str(tmp_path / "g.csv"),
                                 "--grid", str(grilla)])
    assert result.exit_code == 2


def test_analyze_con_timelines(runner, tmp_path, corpus_modelos):
    docs = parse_json_corpus(corpus_modelos)
    tls = write_timelines([(d.id, truth_timeline(d, 0.1)) for d in docs], tmp_path / "verdad.jsonl")
    json_out = tmp_path / "analisis.json"
    result = runner.invoke(cli, ["analyze", "--corpus", str(corpus_modelos), "--timelines", str(tls),
                                 "-k", "2", "--json-out", str(json_out)])
    assert result.exit_code == 0, result.output
    assert "shortest:" in result.output
    assert "distancia media satisfechos" in result.output
    salida = json.loads(json_out.read_text(encoding="utf-8"))
    assert set(salida) == {"extremes", "distances", "labels"}
    assert len(salida["extremes"]["longest"]) == 2
    assert salida["distances"]["violated_count"] == 0
    assert (tmp_path / "analisis.json.manifest.json").exists()


def test_analyze_scaling_requiere_checkpoint(runner, tmp_path, corpus_modelos):
    docs = parse_json_corpus(corpus_modelos)
    tls = write_timelines([(d.id, truth_timeline(d, 0.1)) for d in docs], tmp_path / "verdad.jsonl")
    result = runner.invoke(cli, ["analyze", "--corpus", str(corpus_modelos), "--timelines", str(tls), "--scaling"])
    assert result.exit_code == 2


# Reejecuciones idénticas


def _config_del_manifiesto(path):
    data = json.loads(path.read_text(encoding="utf-8"))
    return data["config"], data["seed"]


def test_tl2rtl_reejecucion_identica(runner, tmp_path, corpus_file):
    salidas = []
    for nombre in ("a", "b"):
        out = tmp_path / nombre / "tl.jsonl"
        out.parent.mkdir()
        result = runner.invoke(cli, ["tl2rtl", "--corpus", str(corpus_file), "--out", str(out),
                                     "--epochs", "200", "--jobs", "2"])
        assert result.exit_code == 0, result.output
        salidas.append(out)
    assert salidas[0].read_bytes() == salidas[1].read_bytes()
    diagnosticos = [ruta.parent / "tl.jsonl.diagnostics.json" for ruta in salidas]
    assert diagnosticos[0].read_bytes() == diagnosticos[1].read_bytes()
    assert _config_del_manifiesto(salidas[0].parent / "tl.jsonl.manifest.json") == \
        _config_del_manifiesto(salidas[1].parent / "tl.jsonl.manifest.json")


def test_train_y_predict_reejecucion_identica(runner, tmp_path, corpus_modelos):
    modelos = [_entrenar(runner, corpus_modelos, tmp_path / f"{nombre}.json") for nombre in ("a", "b")]
    assert modelos[0].read_bytes() == modelos[1].read_bytes()
    assert (tmp_path / "a.json.log.csv").read_bytes() == (tmp_path / "b.json.log.csv").read_bytes()

    predicciones = []
    for modelo in modelos:
        out = tmp_path / f"{modelo.stem}.pred.jsonl"
        result = runner.invoke(cli, ["predict", "--checkpoint", str(modelo), "--corpus", str(corpus_modelos),
                                     "--out", str(out), "--all-pairs"])
        assert result.exit_code == 0, result.output
        predicciones.append(out)
    assert predicciones[0].read_bytes() == predicciones[1].read_bytes()
    assert (tmp_path / "a.pred.jsonl.tlinks.jsonl").read_bytes() == (tmp_path / "b.pred.jsonl.tlinks.jsonl").read_bytes()


def test_grid_reejecucion_identica(runner, tmp_path, corpus_modelos):
    tablas = []
    for nombre in ("a", "b"):
        out = tmp_path / f"{nombre}.csv"
        result = runner.invoke(cli, ["grid", "--corpus", str(corpus_modelos), "--out", str(out), "--kind", "s-tlm",
                                     "--grid-m-tau", "0.0", "--grid-m-tau", "0.025", *ENTRENAMIENTO_CORTO])
        assert result.exit_code == 0, result.output
        tablas.append(out)
    assert tablas[0].read_bytes() == tablas[1].read_bytes()
    assert (tmp_path / "a.csv.best.json").read_bytes() == (tmp_path / "b.csv.best.json").read_bytes()


def test_render_svg_reejecucion_identica(runner, tmp_path, make_timeline):
    path = write_timelines([("d1", make_timeline({"a": (0.0, 1.0), "b": (2.0, 0.5)}))], tmp_path / "tl.jsonl")
    salidas = []
    for nombre in ("a.svg", "b.svg"):
        result = runner.invoke(cli, ["render", "--timelines", str(path), "--format", "svg",
                                     "--out", str(tmp_path / nombre)])
        assert result.exit_code == 0, result.output
        salidas.append(tmp_path / nombre)
    assert salidas[0].read_bytes() == salidas[1].read_bytes()
