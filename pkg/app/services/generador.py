"""
Generador de corpus sintético con time-line oculto

Cada documento elige entidades de un léxico cuyo intervalo verdadero es fijo;
los TLinks se derivan de esos intervalos, por lo que siempre son consistentes.
"""
import logging
from typing import Dict, List

import numpy as np

from app.errors import ConfigError
from app.schemas.corpus_schemas import Document, EntityKind, LexiconEntry, SynthConfig
from app.schemas.timeline_schemas import RelativeTimeline
from app.services.pointalg import relation_between

logger = logging.getLogger(__name__)

DCT_ID = "t0"
DCT_INTERVAL = (0.0, 1.0)


def _entrada(word, start, duration, kind=EntityKind.EVENT, **attrs) -> LexiconEntry:
    return LexiconEntry(word=word, kind=kind, start=start, duration=duration, attrs=attrs)


# Familia laminar de intervalos: cada par está anidado, es disjunto o se toca,
# así que siempre existe una relación TimeML exacta entre dos entradas
DEFAULT_LEXICON: List[LexiconEntry] = [
    _entrada("war", -8.0, 4.0, **{"class": "OCCURRENCE", "tense": "NONE"}),
    _entrada("fought", -7.5, 1.0, **{"class": "OCCURRENCE", "tense": "PAST"}),
    _entrada("retreated", -6.0, 1.0, **{"class": "OCCURRENCE", "tense": "PAST"}),
    _entrada("campaign", -4.0, 4.0, **{"class": "OCCURRENCE", "tense": "NONE"}),
    _entrada("signed", -3.5, 1.0, **{"class": "OCCURRENCE", "tense": "PAST"}),
    _entrada("resigned", -2.0, 1.0, **{"class": "OCCURRENCE", "tense": "PAST"}),
    _entrada("announced", -1.0, 1.0, **{"class": "REPORTING", "tense": "PAST"}),
    _entrada("today", 0.0, 1.0, EntityKind.TIMEX, type="DATE"),
    _entrada("says", 0.25, 0.5, **{"class": "REPORTING", "tense": "PRESENT"}),
    _entrada("summit", 1.0, 4.0, **{"class": "OCCURRENCE", "tense": "NONE"}),
    _entrada("arrive", 1.0, 1.0, **{"class": "OCCURRENCE", "tense": "FUTURE"}),
    _entrada("talks", 2.0, 1.0, **{"class": "OCCURRENCE", "tense": "FUTURE"}),
    _entrada("vote", 3.0, 1.0, **{"class": "OCCURRENCE", "tense": "FUTURE"}),
    _entrada("leave", 5.5, 0.5, **{"class": "OCCURRENCE", "tense": "FUTURE"}),
]

FILLER = ["the", "a", "of", "and", "in", "on", "for", "that", "officials", "city"]

# Núcleos neutros del modo dependiente del contexto
NEUTRAL_HEADS = ["event", "episode", "incident"]


def validar_synth_config(config: SynthConfig) -> None:
    """
    Raises:
        ConfigError: densidad fuera de (0, 1], sin entidades o parámetros inválidos
    """
    if not 0 < config.density <= 1:
        raise ConfigError(f"La densidad de TLinks debe estar en (0, 1], se recibió {config.density}")
    if config.entities_per_doc < 1:
        raise ConfigError("Se necesita al menos una entidad por documento para enlazar con el DCT")
    if config.n_docs < 0:
        raise ConfigError("n_docs no puede ser negativo")
    if not 0 <= config.dct_link_rate <= 1:
        raise ConfigError(f"dct_link_rate debe estar en [0, 1], se recibió {config.dct_link_rate}")
    if config.min_filler < 0 or config.max_filler < config.min_filler:
        raise ConfigError("Rango de relleno inválido")
    if config.lexicon is not None and not config.lexicon:
        raise ConfigError("El léxico no puede estar vacío")


def _documento(config: SynthConfig, lexicon: List[LexiconEntry], rng: np.random.Generator, doc_id: str) -> Document:
    k = config.entities_per_doc
    elegidas = rng.choice(len(lexicon), size=k, replace=k > len(lexicon))

    tokens: List[Dict] = []
    entities: List[Dict] = [{"id": DCT_ID, "kind": "DCT", "attrs": {"type": "DATE"}}]
    truth = {DCT_ID: DCT_INTERVAL}

    def relleno():
        for _ in range(int(rng.integers(config.min_filler, config.max_filler + 1))):
            tokens.append({"t": FILLER[int(rng.integers(len(FILLER)))]})

    n_eventos = n_timex = 0
    for j in elegidas:
        entrada = lexicon[int(j)]
        relleno()
        tokens.append({"t": entrada.word})
        if config.context_dependent:
            # La pista queda fuera del span: sólo un modelo contextual puede usarla
            tokens.append({"t": NEUTRAL_HEADS[int(rng.integers(len(NEUTRAL_HEADS)))]})
            kind, attrs = EntityKind.EVENT, {"class": "OCCURRENCE"}
        else:
            kind, attrs = entrada.kind, dict(entrada.attrs)

        if kind == EntityKind.TIMEX:
            n_timex += 1
            ident = f"t{n_timex}"
        else:
            n_eventos += 1
            ident = f"e{n_eventos}"
        posicion = len(tokens) - 1
        entities.append({"id": ident, "kind": kind.value, "span": [posicion, posicion], "attrs": attrs})
        truth[ident] = (entrada.start, entrada.duration)
    relleno()
    tokens.append({"t": "."})

    ids = [e["id"] for e in entities[1:]]
    tlinks = []
    for a in range(len(ids)):
        for b in range(a + 1, len(ids)):
            keep = rng.random() < config.density
            sa, da = truth[ids[a]]
            sb, db = truth[ids[b]]
            relacion = relation_between(sa, sa + da, sb, sb + db)
            if keep and relacion is not None:
                tlinks.append({"source": ids[a], "target": ids[b], "relation": relacion})

    for ident in ids:
        if rng.random() < config.dct_link_rate:
            s, d = truth[ident]
            relacion = relation_between(s, s + d, DCT_INTERVAL[0], DCT_INTERVAL[0] + DCT_INTERVAL[1])
            if relacion is not None:
                tlinks.append({"source": ident, "target": DCT_ID, "relation": relacion})

    return Document(
        id=doc_id,
        tokens=[{"index": i, "surface": t["t"]} for i, t in enumerate(tokens)],
        entities=entities,
        tlinks=tlinks,
        truth=truth,
    )


def generate_synthetic(config: SynthConfig, seed: int) -> List[Document]:
    """
    Generar documentos sintéticos deterministas para (config, seed)

    Raises:
        ConfigError: configuración inválida
    """
    validar_synth_config(config)
    lexicon = config.lexicon or DEFAULT_LEXICON
    rng = np.random.default_rng(seed)
    docs = [_documento(config, lexicon, rng, f"synth-{seed}-{i:04d}") for i in range(config.n_docs)]
    total = sum(len(d.tlinks) for d in docs)
    logger.info(f"🧪 {len(docs)} documentos sintéticos generados (seed={seed}, {total} TLinks)")
    return docs


def truth_timeline(doc: Document, d_min: float):
    """Time-line oculto de un documento sintético"""
    if doc.truth is None:
        return None
    ids = doc.entity_order()
    return RelativeTimeline.from_values(
        ids, [doc.truth[i][0] for i in ids], [doc.truth[i][1] for i in ids], doc.dct.id, d_min
    )

