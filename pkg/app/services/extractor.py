"""
Tokenización simple e importador del subconjunto TimeML (EVENT, TIMEX3, MAKEINSTANCE, TLINK)
"""
import logging
import re
from pathlib import Path
from typing import Dict, List, Tuple, Union

from lxml import etree

from app.errors import CorpusParseError, CorpusValidationError
from app.crud.corpus_crud import build_document
from app.services.pointalg import normalize_relation

logger = logging.getLogger(__name__)

PUNCTUATION = ",./\\\"'=+-;:()!?<>%&$*|[]{}"
_SPLIT = re.compile("([" + re.escape(PUNCTUATION) + "])")

# Atributos que pasan al vector booleano de la entidad
EVENT_ATTRS = ("class",)
INSTANCE_ATTRS = ("tense", "aspect", "polarity")
TIMEX_ATTRS = ("type",)


def tokenize(text: str) -> List[str]:
    """Separar por espacios y saltos de línea, aislar la puntuación y pasar a minúsculas"""
    tokens = []
    for pieza in text.split():
        tokens.extend(t for t in _SPLIT.split(pieza.lower()) if t)
    return tokens


def _local(tag) -> str:
    return etree.QName(tag).localname if isinstance(tag, str) else ""


class _Lector:
    """Recorre TEXT acumulando tokens y los spans de EVENT/TIMEX3"""

    def __init__(self):
        self.tokens: List[str] = []
        self.entities: List[Dict] = []

    def agregar(self, texto):
        if texto:
            self.tokens.extend(tokenize(texto))

    def recorrer(self, elem):
        self.agregar(elem.text)
        for hijo in elem:
            nombre = _local(hijo.tag)
            if nombre in ("EVENT", "TIMEX3"):
                inicio = len(self.tokens)
                self.recorrer(hijo)
                fin = len(self.tokens) - 1
                self._entidad(hijo, nombre, inicio, fin)
            else:
                self.recorrer(hijo)
            self.agregar(hijo.tail)

    def _entidad(self, elem, nombre, inicio, fin):
        ident = elem.get("eid") if nombre == "EVENT" else elem.get("tid")
        if not ident:
            raise CorpusValidationError(f"{nombre} sin identificador en la línea {elem.sourceline}")
        if fin < inicio:
            raise CorpusValidationError(f"La entidad '{ident}' no contiene tokens")
        if nombre == "EVENT":
            attrs = {k: elem.get(k) for k in EVENT_ATTRS if elem.get(k)}
            kind = "EVENT"
        else:
            attrs = {k: elem.get(k) for k in TIMEX_ATTRS if elem.get(k)}
            kind = "TIMEX"
        self.entities.append({"id": ident, "kind": kind, "span": [inicio, fin], "attrs": attrs})


def parse_timeml_string(xml: Union[str, bytes], default_id: str = "doc") -> dict:
    """Convertir TimeML al diccionario del formato JSON del corpus"""
    try:
        raiz = etree.fromstring(xml.encode("utf-8") if isinstance(xml, str) else xml)
    except etree.XMLSyntaxError as e:
        raise CorpusParseError(f"XML inválido: {e.msg}", line=e.lineno) from e

    docid = next((e.text.strip() for e in raiz.iter() if _local(e.tag) == "DOCID" and e.text), default_id)

    dcts = [
        e for e in raiz.iter()
        if _local(e.tag) == "TIMEX3" and e.get("functionInDocument") == "CREATION_TIME"
    ]
    if not dcts:
        raise CorpusValidationError(f"Documento '{docid}': falta el TIMEX3 con functionInDocument=CREATION_TIME")

    texto = next((e for e in raiz.iter() if _local(e.tag) == "TEXT"), None)
    if texto is None:
        raise CorpusValidationError(f"Documento '{docid}': falta el elemento TEXT")

    lector = _Lector()
    lector.recorrer(texto)

    dct = dcts[0]
    entidades = [{"id": dct.get("tid"), "kind": "DCT",
                  "attrs": {k: dct.get(k) for k in TIMEX_ATTRS if dct.get(k)}}]
    entidades += [e for e in lector.entities if e["id"] != dct.get("tid")]

    # Instancias: eiid -> eid, y atributos gramaticales del evento
    instancias = {}
    por_id = {e["id"]: e for e in entidades}
    for mi in (e for e in raiz.iter() if _local(e.tag) == "MAKEINSTANCE"):
        instancias[mi.get("eiid")] = mi.get("eventID")
        evento = por_id.get(mi.get("eventID"))
        if evento is not None:
            evento["attrs"].update({k: mi.get(k) for k in INSTANCE_ATTRS if mi.get(k)})

    tlinks = []
    for tl in (e for e in raiz.iter() if _local(e.tag) == "TLINK"):
        fuente = tl.get("timeID") or instancias.get(tl.get("eventInstanceID"), tl.get("eventInstanceID"))
        destino = tl.get("relatedToTime") or instancias.get(
            tl.get("relatedToEventInstance"), tl.get("relatedToEventInstance")
        )
        tlinks.append({"source": fuente, "target": destino, "relation": normalize_relation(tl.get("relType"))})

    return {
        "id": docid,
        "tokens": [{"t": t} for t in lector.tokens],
        "entities": entidades,
        "tlinks": tlinks,
    }


def parse_timeml_subset(path: Union[str, Path]):
    """Leer un archivo TimeML y devolver un Document validado"""
    path = Path(path)
    data = parse_timeml_string(path.read_bytes(), default_id=path.stem)
    doc = build_document(data)
    logger.info(f"📄 TimeML {path.name}: {len(doc.entities)} entidades, {len(doc.tlinks)} TLinks")
    return doc
