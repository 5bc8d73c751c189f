import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from datagen.qaItem import QAItem
from model.context import ModelContext
from model.kernels import embedQuestion, entityWeightRows
from model.params import RecognitionParams
from utils.csvWriter import appendCsv

logger = logging.getLogger(__name__)

METRICS_FIELDS = ["dataset", "hop", "regime", "hits_at_1", "entity_accuracy", "model"]


@dataclass
class Metrics:
    hitsAt1: float
    count: int
    entityAccuracy: Optional[float] = None
    perHop: Dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        for value in [self.hitsAt1, self.entityAccuracy, *self.perHop.values()]:
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValueError(f"metric outside [0, 1]: {value}")


def hitsAt1(predict: Callable[[QAItem], int], items: Sequence[QAItem]) -> Metrics:
    """
    Fraction of items whose single predicted entity is a gold answer.

    Args:
        predict: Maps an item to one entity id
        items: Nonempty evaluation set

    Returns:
        Metrics with the overall and per-hop hits@1
    """
    if not items:
        raise ValueError("hits@1 of an empty dataset")
    hits: Dict[int, List[bool]] = {}
    for item in items:
        hits.setdefault(item.hops, []).append(predict(item) in item.answers)
    allHits = [h for values in hits.values() for h in values]
    return Metrics(
        hitsAt1=float(np.mean(allHits)),
        count=len(allHits),
        perHop={hop: float(np.mean(values)) for hop, values in sorted(hits.items())},
    )


def entityAccuracy(recognition: RecognitionParams, items: Sequence[QAItem], context: ModelContext) -> float:
    """
    Fraction of labeled items whose argmax of P_θ1(y|q) is the topic label.

    Ties go to the lower entity id. Raises on an unlabeled item.
    """
    if not items:
        raise ValueError("entity accuracy of an empty dataset")
    weights = entityWeightRows(recognition, None, context)
    correct = 0
    for item in items:
        if item.topicEntity is None:
            raise ValueError(f"unlabeled item in entity-accuracy set: {item.text!r}")
        q = context.vocab.encode(item.tokens)
        logits = weights @ embedQuestion(recognition.entTokens, q)
        correct += int(np.argmax(logits)) == item.topicEntity
    return correct / len(items)


def metricsRows(dataset: str, regime: str, model: str, metrics: Metrics) -> List[Dict[str, object]]:
    """One CSV row per hop present in the metrics."""
    return [
        {
            "dataset": dataset,
            "hop": hop,
            "regime": regime,
            "hits_at_1": value,
            "entity_accuracy": metrics.entityAccuracy,
            "model": model,
        }
        for hop, value in metrics.perHop.items()
    ]


def appendMetrics(path, rows: List[Dict[str, object]]) -> None:
    appendCsv(path, METRICS_FIELDS, rows)
    logger.info(f"Metrics written to {path}")
