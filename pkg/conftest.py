"""
Fixtures compartidas de las pruebas
"""
import os
from typing import Dict, Iterable, Sequence, Tuple

import pytest

from app.schemas.corpus_schemas import Document, SynthConfig
from app.schemas.timeline_schemas import LossConfig, RelativeTimeline
from app.services.generador import generate_synthetic


def pytest_collection_modifyitems(config, items):
    if os.getenv("RELATIME_SLOW") == "1":
        return
    saltar = pytest.mark.skip(reason="prueba lenta: correr con RELATIME_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(saltar)


def build_doc(ids: Sequence[str], tlinks: Iterable[Tuple[str, str, str]] = (), doc_id: str = "d1",
              words: Dict[str, str] = None) -> Document:
    """Documento con un token por entidad (más un punto final) y el DCT 't0'"""
    words = words or {}
    tokens = [{"index": i, "surface": words.get(e, f"w{e}")} for i, e in enumerate(ids)]
    tokens.append({"index": len(ids), "surface": "."})
    entities = [{"id": "t0", "kind": "DCT"}] + [
        {"id": e, "kind": "EVENT", "span": (i, i), "attrs": {"class": "OCCURRENCE"}} for i, e in enumerate(ids)
    ]
    return Document(
        id=doc_id,
        tokens=tokens,
        entities=entities,
        tlinks=[{"source": s, "target": t, "relation": r} for s, t, r in tlinks],
    )


def build_timeline(values: Dict[str, Tuple[float, float]], d_min: float = 0.1) -> RelativeTimeline:
    """Time-line desde {id: (inicio, duración)}; agrega el DCT en (0, 1) si falta"""
    values = {"t0": (0.0, 1.0), **values}
    ids = list(values)
    return RelativeTimeline.from_values(ids, [values[i][0] for i in ids], [values[i][1] for i in ids], "t0", d_min)


@pytest.fixture
def cfg() -> LossConfig:
    return LossConfig()


@pytest.fixture
def make_doc():
    return build_doc


@pytest.fixture
def make_timeline():
    return build_timeline


@pytest.fixture(scope="session")
def synthetic_corpus():
    return generate_synthetic(SynthConfig(n_docs=10, entities_per_doc=5, density=1.0), seed=7)


@pytest.fixture(scope="session")
def small_corpus():
    return generate_synthetic(SynthConfig(n_docs=6, entities_per_doc=4, density=1.0, dct_link_rate=1.0), seed=3)
