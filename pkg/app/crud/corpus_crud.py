"""
Lectura y escritura de corpus JSON-lines, embeddings y archivos de time-lines
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from app.errors import CorpusParseError, CorpusValidationError, EmbeddingFormatError
from app.schemas.corpus_schemas import Document, TLink
from app.schemas.timeline_schemas import RelativeTimeline
from app.services.pointalg import normalize_relation
from app.services.timeline import timeline_from_json, timeline_to_json

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def build_document(data: Dict[str, Any], line: Optional[int] = None) -> Document:
    """
    Construir un Document desde el formato JSON del corpus

    Raises:
        CorpusValidationError: si el documento no cumple los invariantes
        UnsupportedRelationError: si una relación no es un TLink soportado
    """
    donde = f"línea {line}: " if line is not None else ""
    try:
        tokens = [
            {"index": i, "surface": t["t"], "pos": t.get("pos")}
            for i, t in enumerate(data.get("tokens", []))
        ]
        tlinks = [
            {"source": t["source"], "target": t["target"], "relation": normalize_relation(t["relation"])}
            for t in data.get("tlinks", [])
        ]
        return Document(
            id=data["id"],
            tokens=tokens,
            entities=data.get("entities", []),
            tlinks=tlinks,
            truth=data.get("truth"),
        )
    except ValidationError as e:
        mensajes = "; ".join(err["msg"] for err in e.errors())
        raise CorpusValidationError(f"{donde}{mensajes}") from e
    except (KeyError, TypeError) as e:
        raise CorpusValidationError(f"{donde}campo faltante o inválido: {e}") from e


def document_to_dict(doc: Document) -> Dict[str, Any]:
    tokens = []
    for t in doc.tokens:
        token = {"t": t.surface}
        if t.pos is not None:
            token["pos"] = t.pos
        tokens.append(token)
    entities = []
    for e in doc.entities:
        entity = {"id": e.id, "kind": e.kind.value}
        if e.span is not None:
            entity["span"] = list(e.span)
        entity["attrs"] = dict(e.attrs)
        entities.append(entity)
    data = {
        "id": doc.id,
        "tokens": tokens,
        "entities": entities,
        "tlinks": [{"source": t.source, "target": t.target, "relation": t.relation.value} for t in doc.tlinks],
    }
    if doc.truth is not None:
        data["truth"] = {k: [float(s), float(d)] for k, (s, d) in doc.truth.items()}
    return data


def serialize_json(doc: Document) -> str:
    """Una línea JSON por documento"""
    return json.dumps(document_to_dict(doc), ensure_ascii=False)


def serialize_corpus(docs: Iterable[Document]) -> str:
    return "".join(serialize_json(d) + "\n" for d in docs)


def _lineas(text: str):
    """Numerar las líneas de un JSON-lines; U+2028 y similares no cortan registros"""
    return enumerate(text.split("\n"), start=1)


def parse_json_lines(text: str) -> List[Document]:
    docs = []
    for n, linea in _lineas(text):
        if not linea.strip():
            continue
        try:
            data = json.loads(linea)
        except json.JSONDecodeError as e:
            raise CorpusParseError(f"JSON mal formado ({e.msg})", line=n) from e
        if not isinstance(data, dict):
            raise CorpusParseError("se esperaba un objeto JSON por línea", line=n)
        docs.append(build_document(data, line=n))
    return docs


def parse_json_corpus(path: PathLike) -> List[Document]:
    """Leer un corpus JSON-lines y validar cada documento"""
    docs = parse_json_lines(Path(path).read_text(encoding="utf-8"))
    logger.info(f"📄 {len(docs)} documentos leídos de {path}")
    return docs


def parse_json_corpus_tolerant(path: PathLike) -> Tuple[List[Document], List[Dict[str, Any]]]:
    """
    Como parse_json_corpus, pero los documentos inválidos se devuelven como
    errores {"line", "id", "error"} en vez de abortar la lectura
    """
    docs, errores = [], []
    for n, linea in _lineas(Path(path).read_text(encoding="utf-8")):
        if not linea.strip():
            continue
        data = None
        try:
            data = json.loads(linea)
            if not isinstance(data, dict):
                raise CorpusParseError("se esperaba un objeto JSON por línea", line=n)
            docs.append(build_document(data, line=n))
        except json.JSONDecodeError as e:
            errores.append({"line": n, "id": None, "error": str(CorpusParseError(f"JSON mal formado ({e.msg})", line=n))})
        except (CorpusParseError, CorpusValidationError) as e:
            ident = data.get("id") if isinstance(data, dict) else None
            errores.append({"line": n, "id": ident, "error": str(e)})
    for err in errores:
        logger.error(f"❌ {path}: {err['error']}")
    logger.info(f"📄 {len(docs)} documentos leídos de {path}, {len(errores)} inválidos")
    return docs, errores


def read_tlinks(path: PathLike) -> Dict[str, List[TLink]]:
    """
    Leer TLinks por documento de un JSON-lines con claves "id" y "tlinks"

    Un corpus completo también sirve como fuente.
    """
    fuente = {}
    for n, linea in _lineas(Path(path).read_text(encoding="utf-8")):
        if not linea.strip():
            continue
        try:
            data = json.loads(linea)
            fuente[data["id"]] = [
                TLink(source=t["source"], target=t["target"], relation=t["relation"]) for t in data["tlinks"]
            ]
        except json.JSONDecodeError as e:
            raise CorpusParseError(f"JSON mal formado ({e.msg})", line=n) from e
        except (KeyError, TypeError) as e:
            raise CorpusParseError(f"campo faltante o inválido: {e}", line=n) from e
        except ValidationError as e:
            raise CorpusValidationError(f"línea {n}: {e.errors()[0]['msg']}") from e
    logger.info(f"📄 TLinks de {len(fuente)} documentos leídos de {path}")
    return fuente


def write_tlinks(items: Iterable[Tuple[str, List[TLink]]], path: PathLike) -> Path:
    path = Path(path)
    lineas = [
        json.dumps({"id": doc_id, "tlinks": [t.model_dump(mode="json") for t in tlinks]}, ensure_ascii=False) + "\n"
        for doc_id, tlinks in items
    ]
    path.write_text("".join(lineas), encoding="utf-8")
    return path


def write_corpus(docs: Iterable[Document], path: PathLike) -> Path:
    path = Path(path)
    docs = list(docs)
    path.write_text(serialize_corpus(docs), encoding="utf-8")
    logger.info(f"💾 {len(docs)} documentos escritos en {path}")
    return path


def load_embeddings(path: PathLike, dim: int) -> Dict[str, np.ndarray]:
    """
    Leer embeddings en formato texto 'palabra v1 ... v_dim'

    Las palabras duplicadas conservan la primera aparición.
    """
    if dim < 1:
        raise ValueError("dim debe ser positivo")
    vectores: Dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as f:
        for n, linea in enumerate(f, start=1):
            partes = linea.split()
            if not partes:
                continue
            palabra, valores = partes[0], partes[1:]
            if len(valores) != dim:
                raise EmbeddingFormatError(
                    f"vector de '{palabra}' con {len(valores)} valores, se esperaban {dim}", line=n
                )
            if palabra in vectores:
                continue
            try:
                vectores[palabra] = np.array([float(v) for v in valores])
            except ValueError as e:
                raise EmbeddingFormatError(f"valor no numérico en '{palabra}'", line=n) from e
    logger.info(f"🔤 {len(vectores)} embeddings de dimensión {dim} leídos de {path}")
    return vectores


def write_timelines(items: Iterable[Tuple[str, RelativeTimeline]], path: PathLike) -> Path:
    """Archivo JSON-lines {"id", "dct", "timeline"} con un documento por línea"""
    path = Path(path)
    lineas = [
        f'{{"id": {json.dumps(doc_id, ensure_ascii=False)}, "dct": {json.dumps(tl.dct_id, ensure_ascii=False)}, '
        f'"timeline": {timeline_to_json(tl)}}}\n'
        for doc_id, tl in items
    ]
    path.write_text("".join(lineas), encoding="utf-8")
    return path


def read_timelines(path: PathLike, d_min: float) -> Dict[str, RelativeTimeline]:
    timelines = {}
    for n, linea in _lineas(Path(path).read_text(encoding="utf-8")):
        if not linea.strip():
            continue
        try:
            data = json.loads(linea)
            timelines[data["id"]] = timeline_from_json(data["timeline"], data["dct"], d_min)
        except (json.JSONDecodeError, KeyError) as e:
            raise CorpusParseError(f"línea de time-line inválida ({e})", line=n) from e
        except ValidationError as e:
            raise CorpusValidationError(f"línea {n}: {e.errors()[0]['msg']}") from e
    return timelines
