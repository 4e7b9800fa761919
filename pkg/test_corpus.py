"""
Pruebas de lectura/escritura del corpus, importador TimeML, embeddings y generador sintético
"""
import json

import numpy as np
import pytest

from app.crud.corpus_crud import (
    build_document,
    load_embeddings,
    parse_json_corpus,
    parse_json_corpus_tolerant,
    parse_json_lines,
    read_timelines,
    read_tlinks,
    serialize_corpus,
    serialize_json,
    write_corpus,
    write_timelines,
    write_tlinks,
)
from app.errors import (
    ConfigError,
    CorpusParseError,
    CorpusValidationError,
    EmbeddingFormatError,
    UnsupportedRelationError,
)
from app.schemas.corpus_schemas import EntityKind, SynthConfig
from app.services.extractor import parse_timeml_subset, tokenize
from app.services.generador import generate_synthetic, truth_timeline
from app.services.pointalg import TLinkType, is_consistent, relation_between

DOC = {
    "id": "d1",
    "tokens": [{"t": "He"}, {"t": "left"}, {"t": "and"}, {"t": "returned", "pos": "VBD"}, {"t": "."}],
    "entities": [
        {"id": "t0", "kind": "DCT", "attrs": {"type": "DATE"}},
        {"id": "e1", "kind": "EVENT", "span": [1, 1], "attrs": {"class": "OCCURRENCE"}},
        {"id": "e2", "kind": "EVENT", "span": [3, 3], "attrs": {"class": "OCCURRENCE"}},
    ],
    "tlinks": [{"source": "e1", "target": "e2", "relation": "BEFORE"}],
}


def _escribir(tmp_path, nombre, lineas):
    path = tmp_path / nombre
    path.write_text("".join(linea + "\n" for linea in lineas), encoding="utf-8")
    return path


def test_parse_documento_minimo(tmp_path):
    docs = parse_json_corpus(_escribir(tmp_path, "c.jsonl", [json.dumps(DOC)]))
    assert len(docs) == 1
    doc = docs[0]
    assert len(doc.tlinks) == 1
    assert doc.tlinks[0].relation == TLinkType.BEFORE
    assert doc.dct.id == "t0"
    assert doc.surface("e2") == "returned"
    assert doc.tokens[3].pos == "VBD"


def test_parse_tlink_colgante():
    data = {**DOC, "tlinks": [{"source": "e1", "target": "e9", "relation": "BEFORE"}]}
    with pytest.raises(CorpusValidationError) as info:
        build_document(data)
    assert "e9" in str(info.value)


def test_parse_archivo_vacio(tmp_path):
    assert parse_json_corpus(_escribir(tmp_path, "vacio.jsonl", [])) == []


def test_parse_json_mal_formado_indica_la_linea():
    with pytest.raises(CorpusParseError) as info:
        parse_json_lines(json.dumps(DOC) + "\n{\"id\": \n")
    assert info.value.line == 2


@pytest.mark.parametrize("n_dct", [0, 2])
def test_parse_cantidad_de_dct(n_dct):
    dcts = [{"id": f"t{i}", "kind": "DCT"} for i in range(n_dct)]
    data = {**DOC, "entities": dcts + DOC["entities"][1:]}
    with pytest.raises(CorpusValidationError):
        build_document(data)


def test_parse_span_fuera_de_rango():
    entidades = DOC["entities"][:2] + [{"id": "e2", "kind": "EVENT", "span": [3, 9]}]
    with pytest.raises(CorpusValidationError):
        build_document({**DOC, "entities": entidades})


def test_parse_relacion_during():
    data = {**DOC, "tlinks": [{"source": "e1", "target": "e2", "relation": "DURING"}]}
    assert build_document(data).tlinks[0].relation == TLinkType.SIMULTANEOUS


def test_parse_tolerante(tmp_path):
    malo = {**DOC, "id": "d2", "tlinks": [{"source": "e1", "target": "e9", "relation": "BEFORE"}]}
    path = _escribir(tmp_path, "c.jsonl", [json.dumps(DOC), "no es json", json.dumps(malo)])
    docs, errores = parse_json_corpus_tolerant(path)
    assert [d.id for d in docs] == ["d1"]
    assert [(e["line"], e["id"]) for e in errores] == [(2, None), (3, "d2")]


TIMEML = """<?xml version="1.0"?>
<TimeML>
<DOCID>nyt-01</DOCID>
<DCT><TIMEX3 tid="t0" type="DATE" value="2020-01-01" functionInDocument="CREATION_TIME">2020-01-01</TIMEX3></DCT>
<TEXT>He <EVENT eid="e1" class="OCCURRENCE">ran</EVENT> before <TIMEX3 tid="t1" type="DATE">Monday</TIMEX3>.</TEXT>
<MAKEINSTANCE eiid="ei1" eventID="e1" tense="PAST" aspect="NONE"/>
<TLINK lid="l1" eventInstanceID="ei1" relatedToTime="t1" relType="{rel}"/>
</TimeML>
"""


def _timeml(tmp_path, rel="BEFORE", texto=None):
    path = tmp_path / "doc.tml"
    path.write_text(texto or TIMEML.replace("{rel}", rel), encoding="utf-8")
    return path


def test_timeml_minimo(tmp_path):
    doc = parse_timeml_subset(_timeml(tmp_path))
    assert doc.id == "nyt-01"
    assert [t.surface for t in doc.tokens] == ["he", "ran", "before", "monday", "."]
    assert [e.id for e in doc.entities] == ["t0", "e1", "t1"]
    assert doc.entity("e1").attrs == {"class": "OCCURRENCE", "tense": "PAST", "aspect": "NONE"}
    assert doc.entity("t1").kind == EntityKind.TIMEX
    assert [(t.source, t.target, t.relation) for t in doc.tlinks] == [("e1", "t1", TLinkType.BEFORE)]


def test_timeml_coincide_con_json(tmp_path):
    data = {
        "id": "nyt-01",
        "tokens": [{"t": t} for t in ["he", "ran", "before", "monday", "."]],
        "entities": [
            {"id": "t0", "kind": "DCT", "attrs": {"type": "DATE"}},
            {"id": "e1", "kind": "EVENT", "span": [1, 1], "attrs": {"class": "OCCURRENCE", "tense": "PAST", "aspect": "NONE"}},
            {"id": "t1", "kind": "TIMEX", "span": [3, 3], "attrs": {"type": "DATE"}},
        ],
        "tlinks": [{"source": "e1", "target": "t1", "relation": "BEFORE"}],
    }
    assert parse_timeml_subset(_timeml(tmp_path)) == build_document(data)


def test_timeml_during(tmp_path):
    assert parse_timeml_subset(_timeml(tmp_path, "DURING")).tlinks[0].relation == TLinkType.SIMULTANEOUS


def test_timeml_overlap(tmp_path):
    with pytest.raises(UnsupportedRelationError) as info:
        parse_timeml_subset(_timeml(tmp_path, "OVERLAP"))
    assert "SIMULTANEOUS" in str(info.value)


def test_timeml_sin_dct(tmp_path):
    texto = TIMEML.replace("{rel}", "BEFORE").replace(' functionInDocument="CREATION_TIME"', "")
    with pytest.raises(CorpusValidationError):
        parse_timeml_subset(_timeml(tmp_path, texto=texto))


def test_timeml_xml_invalido(tmp_path):
    with pytest.raises(CorpusParseError):
        parse_timeml_subset(_timeml(tmp_path, texto="<TimeML><TEXT>sin cerrar</TimeML>"))


def test_tokenize():
    assert tokenize("He said: \"Stop!\"\nThen  left.") == ["he", "said", ":", "\"", "stop", "!", "\"", "then", "left", "."]
    assert tokenize("U.S.") == ["u", ".", "s", "."]
    assert tokenize("") == []


def _vector(n):
    return " ".join(f"{0.01 * i:.2f}" for i in range(n))


def test_embeddings(tmp_path):
    path = _escribir(tmp_path, "emb.txt", [f"the {_vector(50)}"])
    vectores = load_embeddings(path, 50)
    assert list(vectores) == ["the"]
    assert vectores["the"].shape == (50,)


def test_embeddings_largo_incorrecto(tmp_path):
    path = _escribir(tmp_path, "emb.txt", [f"the {_vector(50)}", f"cat {_vector(49)}"])
    with pytest.raises(EmbeddingFormatError) as info:
        load_embeddings(path, 50)
    assert info.value.line == 2


def test_embeddings_duplicados_conservan_el_primero(tmp_path):
    path = _escribir(tmp_path, "emb.txt", ["the 1 2", "the 3 4"])
    assert load_embeddings(path, 2)["the"] == pytest.approx([1.0, 2.0])


def test_embeddings_vacio(tmp_path):
    assert load_embeddings(_escribir(tmp_path, "emb.txt", []), 50) == {}


# Generador sintético


def test_generador_densidad_completa(synthetic_corpus):
    assert len(synthetic_corpus) == 10
    for doc in synthetic_corpus:
        pares = [t for t in doc.tlinks if "t0" not in (t.source, t.target)]
        assert len(pares) == 10
        assert is_consistent(doc.tlinks)[0]


def test_generador_densidad_parcial_coincide_con_la_verdad():
    docs = generate_synthetic(SynthConfig(n_docs=20, entities_per_doc=5, density=0.3), seed=7)
    pares = sum(len([t for t in d.tlinks if "t0" not in (t.source, t.target)]) for d in docs)
    assert 20 <= pares <= 100
    for doc in docs:
        for t in doc.tlinks:
            (sa, da), (sb, db) = doc.truth[t.source], doc.truth[t.target]
            assert relation_between(sa, sa + da, sb, sb + db) == t.relation


def test_generador_determinista():
    config = SynthConfig(n_docs=4, entities_per_doc=6, density=0.5)
    assert serialize_corpus(generate_synthetic(config, 11)) == serialize_corpus(generate_synthetic(config, 11))
    assert serialize_corpus(generate_synthetic(config, 11)) != serialize_corpus(generate_synthetic(config, 12))


@pytest.mark.parametrize("cambios", [{"density": 0.0}, {"density": 1.5}, {"entities_per_doc": 0},
                                     {"dct_link_rate": 2.0}, {"min_filler": 3, "max_filler": 1}])
def test_generador_configuracion_invalida(cambios):
    with pytest.raises(ConfigError):
        generate_synthetic(SynthConfig(**cambios), seed=0)


def test_generador_dependiente_del_contexto():
    docs = generate_synthetic(SynthConfig(n_docs=3, entities_per_doc=4, context_dependent=True), seed=2)
    for doc in docs:
        for e in doc.entities[1:]:
            assert e.kind == EntityKind.EVENT
            assert e.attrs == {"class": "OCCURRENCE"}
            assert doc.surface(e.id) in ("event", "episode", "incident")


def test_truth_timeline(synthetic_corpus):
    doc = synthetic_corpus[0]
    tl = truth_timeline(doc, 0.1)
    assert tl.ids == doc.entity_order()
    assert tl.interval("t0") == (0.0, 1.0)


def test_ida_y_vuelta_del_corpus(synthetic_corpus):
    texto = serialize_corpus(synthetic_corpus)
    leidos = parse_json_lines(texto)
    assert leidos == synthetic_corpus
    assert serialize_corpus(leidos) == texto


def test_ida_y_vuelta_unicode():
    data = {**DOC, "tokens": [{"t": "Él"}, {"t": "partió"}, {"t": "y"}, {"t": "volvió"}, {"t": "…"}]}
    doc = build_document(data)
    assert parse_json_lines(serialize_json(doc))[0] == doc
    assert "partió" in serialize_json(doc)


@pytest.mark.parametrize("separador", ["\x85", "\u2028", "\u2029"])
def test_ida_y_vuelta_con_separadores_unicode(tmp_path, make_timeline, separador):
    data = {**DOC, "id": f"d{separador}1", "tokens": [{"t": f"x{separador}y"}] + DOC["tokens"][1:]}
    doc = build_document(data)
    path = write_corpus([doc, build_document(DOC)], tmp_path / "c.jsonl")
    assert parse_json_corpus(path) == [doc, build_document(DOC)]
    docs, errores = parse_json_corpus_tolerant(path)
    assert len(docs) == 2 and errores == []
    assert docs[0].tokens[0].surface == f"x{separador}y"

    leidos = read_tlinks(write_tlinks([(doc.id, doc.tlinks)], tmp_path / "t.jsonl"))
    assert leidos == {doc.id: doc.tlinks}
    tl = make_timeline({f"e{separador}1": (0.5, 1.0)})
    tls = read_timelines(write_timelines([(doc.id, tl)], tmp_path / "tl.jsonl"), tl.d_min)
    assert list(tls) == [doc.id]
    assert tls[doc.id].end(f"e{separador}1") == pytest.approx(1.5)


def test_ida_y_vuelta_de_tlinks_y_timelines(tmp_path, synthetic_corpus, make_timeline):
    items = [(d.id, d.tlinks) for d in synthetic_corpus[:3]]
    leidos = read_tlinks(write_tlinks(items, tmp_path / "t.jsonl"))
    assert leidos == dict(items)
    assert read_tlinks(_escribir(tmp_path, "c.jsonl", [json.dumps(DOC)]))["d1"][0].target == "e2"

    tl = make_timeline({"e1": (-2.0, 0.5), "e2": (1.25, 3.0)})
    tls = read_timelines(write_timelines([("d1", tl)], tmp_path / "tl.jsonl"), tl.d_min)
    assert tls["d1"].dct_id == "t0"
    assert np.allclose([tls["d1"].end(i) for i in tl.ids], [tl.end(i) for i in tl.ids])
