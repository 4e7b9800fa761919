"""
Figuras PNG: time-line en barras horizontales y mapa de calor de la matriz de confusión
"""
import logging
from pathlib import Path
from typing import Optional, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from app.schemas.corpus_schemas import Document  # noqa: E402
from app.schemas.report_schemas import ConfusionMatrix  # noqa: E402
from app.schemas.timeline_schemas import RelativeTimeline  # noqa: E402

logger = logging.getLogger(__name__)


def plot_timeline(tl: RelativeTimeline, doc: Optional[Document], path: Union[str, Path], dpi: int = 100) -> Path:
    path = Path(path)
    orden = sorted(tl.ids, key=lambda i: (tl.start(i), tl.end(i), i))
    fig, ax = plt.subplots(figsize=(8, 0.4 * len(orden) + 1))
    for fila, i in enumerate(orden):
        dct = i == tl.dct_id
        ax.barh(fila, tl.end(i) - tl.start(i), left=tl.start(i), color="#d62728" if dct else "#1f77b4")
    etiquetas = []
    for i in orden:
        if i == tl.dct_id:
            etiquetas.append(f"{i} (DCT)")
        else:
            etiquetas.append(f"{i} {doc.surface(i)}" if doc is not None else i)
    ax.set_yticks(range(len(orden)))
    ax.set_yticklabels(etiquetas)
    ax.invert_yaxis()
    ax.set_xlabel("tiempo relativo")
    if doc is not None:
        ax.set_title(doc.id)
    fig.tight_layout()
    fig.savefig(path, dpi=dpi, metadata={"Software": None})
    plt.close(fig)
    logger.info(f"📊 Time-line guardado en {path}")
    return path


def plot_confusion(cm: ConfusionMatrix, path: Union[str, Path], dpi: int = 100) -> Path:
    """Porcentajes sobre el total de TLinks evaluados, gold en filas"""
    path = Path(path)
    valores = np.array(cm.percentages) if cm.labels else np.zeros((0, 0))
    n = len(cm.labels)
    fig, ax = plt.subplots(figsize=(1.2 * n + 2, 1.2 * n + 1.5))
    ax.imshow(valores if n else np.zeros((1, 1)), cmap="Blues", vmin=0)
    ax.set_xticks(range(n))
    ax.set_yticks(range(n))
    ax.set_xticklabels(cm.labels, rotation=45, ha="right")
    ax.set_yticklabels(cm.labels)
    ax.set_xlabel("predicho")
    ax.set_ylabel("gold")
    for g in range(n):
        for p in range(n):
            ax.text(p, g, f"{valores[g, p]:.1f}", ha="center", va="center", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=dpi, metadata={"Software": None})
    plt.close(fig)
    logger.info(f"📊 Matriz de confusión guardada en {path}")
    return path
