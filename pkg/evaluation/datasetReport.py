import logging
from typing import Dict, List, Sequence

from datagen.qaItem import DatasetSplit, QAItem

logger = logging.getLogger(__name__)

REPORT_FIELDS = ["hop", "split", "items", "new_entity_ratio", "new_pair_ratio"]


def _topic(item: QAItem):
    return item.sourceEntity if item.sourceEntity is not None else item.topicEntity


def newEntityRatio(train: Sequence[QAItem], held: Sequence[QAItem]) -> float:
    """Share of held-out questions whose topic entity never appears as a training topic."""
    seen = {_topic(i) for i in train}
    known = [i for i in held if _topic(i) is not None]
    if not known:
        return 0.0
    return sum(_topic(i) not in seen for i in known) / len(known)


def newPairRatio(train: Sequence[QAItem], held: Sequence[QAItem]) -> float:
    """Share of held-out (topic, answer) pairs absent from the training pairs."""
    seen = {(_topic(i), a) for i in train for a in i.answers}
    pairs = [(_topic(i), a) for i in held if _topic(i) is not None for a in i.answers]
    if not pairs:
        return 0.0
    return sum(p not in seen for p in pairs) / len(pairs)


def datasetReport(hops: int, split: DatasetSplit) -> List[Dict[str, object]]:
    rows = []
    for name, items in (("validation", split.validation), ("test", split.test)):
        rows.append({
            "hop": hops,
            "split": name,
            "items": len(items),
            "new_entity_ratio": newEntityRatio(split.train, items),
            "new_pair_ratio": newPairRatio(split.train, items),
        })
    logger.info(
        f"{hops}-hop new entities: validation {rows[0]['new_entity_ratio']:.1%}, test {rows[1]['new_entity_ratio']:.1%}"
    )
    return rows


def datasetRegime(train: Sequence[QAItem]) -> str:
    """Vanilla when every training question keeps its topic label, EU otherwise."""
    return "vanilla" if train and all(item.isLabeled for item in train) else "eu"
