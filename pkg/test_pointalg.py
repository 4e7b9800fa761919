"""
Pruebas del álgebra de puntos: interpretación de TLinks, clausura y consistencia
"""
import numpy as np
import pytest

from app.errors import UnsupportedRelationError
from app.schemas.corpus_schemas import TLink
from app.services.pointalg import (
    CANONICAL_ORDER,
    PointConstraint,
    PointOp,
    PointRelation,
    Side,
    TLinkType,
    end,
    entailed_tlink,
    interpret,
    invert,
    is_consistent,
    normalize_relation,
    point_closure,
    relation_between,
    start,
    tlink_closure,
)


def _punto(texto: str):
    lado, entidad = texto.split("_", 1)
    return start(entidad) if lado == "s" else end(entidad)


def _c(texto: str) -> PointConstraint:
    a, op, b = texto.split()
    return PointConstraint(_punto(a), PointOp(op), _punto(b)).canonical()


def _conjunto(constraints):
    return {c.canonical() for c in constraints}


def _tl(*triples):
    return [TLink(source=s, target=t, relation=r) for s, t, r in triples]


TABLA = {
    TLinkType.BEFORE: ["e_x < s_y"],
    TLinkType.AFTER: ["e_y < s_x"],
    TLinkType.IBEFORE: ["e_x = s_y"],
    TLinkType.IAFTER: ["e_y = s_x"],
    TLinkType.BEGINS: ["s_x = s_y", "e_x < e_y"],
    TLinkType.BEGUN_BY: ["s_y = s_x", "e_y < e_x"],
    TLinkType.ENDS: ["e_x = e_y", "s_y < s_x"],
    TLinkType.ENDED_BY: ["e_y = e_x", "s_x < s_y"],
    TLinkType.IS_INCLUDED: ["s_y < s_x", "e_x < e_y"],
    TLinkType.INCLUDES: ["s_x < s_y", "e_y < e_x"],
    TLinkType.SIMULTANEOUS: ["s_x = s_y", "e_x = e_y"],
}


@pytest.mark.parametrize("relacion", CANONICAL_ORDER)
def test_interpret_tabla(relacion):
    """Cada relación se traduce exactamente a sus restricciones de punto"""
    obtenido = interpret(relacion, "x", "y")
    assert len(obtenido) == len(TABLA[relacion])
    assert _conjunto(obtenido) == {_c(t) for t in TABLA[relacion]}


@pytest.mark.parametrize("relacion", CANONICAL_ORDER)
def test_interpret_forma_inversa(relacion):
    """interpret(r, y, x) coincide con interpret(invert(r), x, y)"""
    assert _conjunto(interpret(relacion, "y", "x")) == _conjunto(interpret(invert(relacion), "x", "y"))


def test_cantidad_de_restricciones():
    una = {TLinkType.BEFORE, TLinkType.AFTER, TLinkType.IBEFORE, TLinkType.IAFTER}
    for r in CANONICAL_ORDER:
        assert len(interpret(r, "x", "y")) == (1 if r in una else 2)


def test_invert():
    assert invert(TLinkType.BEFORE) == TLinkType.AFTER
    assert invert(TLinkType.INCLUDES) == TLinkType.IS_INCLUDED
    assert invert(TLinkType.SIMULTANEOUS) == TLinkType.SIMULTANEOUS
    for r in CANONICAL_ORDER:
        assert invert(invert(r)) == r


@pytest.mark.parametrize("etiqueta", ["DURING", "during_inv", "IDENTITY"])
def test_normalize_mapea_a_simultaneous(etiqueta):
    assert normalize_relation(etiqueta) == TLinkType.SIMULTANEOUS


def test_normalize_rechaza_overlap():
    with pytest.raises(UnsupportedRelationError) as info:
        normalize_relation("OVERLAP")
    assert "BEFORE" in str(info.value)
    assert "OVERLAP" in str(info.value)


def test_tlink_normaliza_during():
    assert TLink(source="e1", target="e2", relation="DURING").relation == TLinkType.SIMULTANEOUS


# Clausura


def test_clausura_transitiva():
    a, b, c = start("a"), start("b"), start("c")
    clausura = point_closure([PointConstraint(a, PointOp.LESS, b), PointConstraint(b, PointOp.LESS, c)])
    assert clausura.relation(a, c) == PointRelation.LESS
    assert clausura.relation(c, a) == PointRelation.GREATER


def test_clausura_sustitucion_de_igualdad():
    a, b, c = start("a"), start("b"), start("c")
    clausura = point_closure([PointConstraint(a, PointOp.EQUAL, b), PointConstraint(b, PointOp.LESS, c)])
    assert clausura.relation(a, c) == PointRelation.LESS
    assert clausura.relation(a, b) == PointRelation.EQUAL


def test_clausura_contradiccion():
    a, b = start("a"), start("b")
    clausura = point_closure([PointConstraint(a, PointOp.LESS, b), PointConstraint(b, PointOp.LESS, a)])
    assert clausura.relation(a, b) == PointRelation.INCONSISTENT
    assert not clausura.is_consistent


def test_clausura_siembra_inicio_antes_que_fin():
    clausura = point_closure([PointConstraint(end("a"), PointOp.LESS, start("b"))])
    assert clausura.relation(start("a"), end("a")) == PointRelation.LESS
    assert clausura.relation(start("a"), end("b")) == PointRelation.LESS


def test_clausura_relaciones_desconocidas():
    clausura = point_closure([PointConstraint(start("a"), PointOp.EQUAL, start("c"))], [start("b")])
    assert clausura.relation(start("a"), start("b")) == PointRelation.UNKNOWN
    assert clausura.relation(start("a"), start("z")) == PointRelation.UNKNOWN
    assert clausura.relation(end("a"), end("c")) == PointRelation.UNKNOWN


def test_clausura_idempotente():
    tlinks = _tl(("a", "b", "BEFORE"), ("b", "c", "INCLUDES"), ("c", "d", "IBEFORE"))
    clausura = tlink_closure(tlinks)
    otra = point_closure([
        PointConstraint(p, PointOp.LESS, q)
        for p in clausura.points for q in clausura.points
        if clausura.relation(p, q) == PointRelation.LESS
    ] + [
        PointConstraint(p, PointOp.EQUAL, q)
        for p in clausura.points for q in clausura.points
        if p != q and clausura.relation(p, q) == PointRelation.EQUAL
    ])
    for p in clausura.points:
        for q in clausura.points:
            assert otra.relation(p, q) == clausura.relation(p, q)


def test_clausura_monotona():
    base = _tl(("a", "b", "BEFORE"))
    extendida = base + _tl(("b", "c", "BEFORE"))
    c1, c2 = tlink_closure(base), tlink_closure(extendida)
    for p in c1.points:
        for q in c1.points:
            if c1.relation(p, q) == PointRelation.LESS:
                assert c2.relation(p, q) == PointRelation.LESS


# Consistencia


def test_is_consistent_cadena():
    assert is_consistent(_tl(("A", "B", "BEFORE"), ("B", "C", "BEFORE"), ("A", "C", "BEFORE"))) == (True, None)


def test_is_consistent_ciclo():
    tlinks = _tl(("A", "B", "BEFORE"), ("B", "A", "BEFORE"))
    consistente, conflicto = is_consistent(tlinks)
    assert not consistente
    assert conflicto == (tlinks[0], tlinks[1])


def test_is_consistent_inclusion_mutua():
    consistente, _ = is_consistent(_tl(("A", "B", "INCLUDES"), ("B", "A", "INCLUDES")))
    assert not consistente


def test_is_consistent_señala_el_par_en_conflicto():
    tlinks = _tl(("A", "B", "BEFORE"), ("C", "D", "BEFORE"), ("B", "C", "BEFORE"), ("D", "A", "BEFORE"))
    consistente, conflicto = is_consistent(tlinks)
    assert not consistente
    assert conflicto[1] == tlinks[3]


def test_corpus_sintetico_consistente(synthetic_corpus):
    for doc in synthetic_corpus:
        assert is_consistent(doc.tlinks)[0]


# Implicación


def test_entailed_transitivo():
    assert entailed_tlink(tlink_closure(_tl(("A", "B", "BEFORE"), ("B", "C", "BEFORE"))), "A", "C") == TLinkType.BEFORE


def test_entailed_inverso():
    assert entailed_tlink(tlink_closure(_tl(("A", "B", "BEGINS"))), "B", "A") == TLinkType.BEGUN_BY


def test_entailed_desconocido():
    assert entailed_tlink(tlink_closure(_tl(("A", "B", "BEFORE"))), "B", "C") is None


@pytest.mark.parametrize("relacion", CANONICAL_ORDER)
def test_tabla_inyectiva(relacion):
    """Con dos entidades libres la clausura recupera exactamente la relación"""
    clausura = point_closure(interpret(relacion, "x", "y"))
    assert clausura.is_consistent
    assert entailed_tlink(clausura, "x", "y") == relacion


def test_relation_between():
    assert relation_between(0, 1, 2, 3) == TLinkType.BEFORE
    assert relation_between(0, 1, 1, 2) == TLinkType.IBEFORE
    assert relation_between(1, 2, 0, 3) == TLinkType.IS_INCLUDED
    assert relation_between(0, 2, 0, 2) == TLinkType.SIMULTANEOUS
    # Solapamiento de Allen: sin nombre TimeML
    assert relation_between(0, 2, 1, 3) is None


def test_clausura_de_intervalos_enteros():
    """TLinks derivados de intervalos concretos: consistentes y recuperables"""
    rng = np.random.default_rng(0)
    for _ in range(30):
        valores = {}
        for e in "abc":
            s = int(rng.integers(0, 4))
            valores[e] = (s, s + int(rng.integers(1, 3)))
        tlinks = []
        ids = list(valores)
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                x, y = ids[i], ids[j]
                r = relation_between(valores[x][0], valores[x][1], valores[y][0], valores[y][1])
                if r is not None:
                    tlinks.append(TLink(source=x, target=y, relation=r))
        clausura = tlink_closure(tlinks)
        assert clausura.is_consistent
        for t in tlinks:
            assert entailed_tlink(clausura, t.source, t.target) == t.relation
        assert all(p.side in (Side.START, Side.END) for p in clausura.points)
