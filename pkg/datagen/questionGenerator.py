import logging
import math
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

import numpy as np

from knowledge.kgStore import Direction, KnowledgeGraph
from templates.questionTemplates import PathStep, QuestionTemplate

from .entityLabeler import NameMatcher
from .kgGenerator import TemplateCoverageError
from .qaItem import QAItem

logger = logging.getLogger(__name__)


def _step(graph: KnowledgeGraph, frontier: Set[int], relation: int, direction: Direction) -> Set[int]:
    nxt: Set[int] = set()
    for e in frontier:
        adjacency = graph.outAdj[e] if direction is Direction.FORWARD else graph.inAdj[e]
        nxt.update(n for n, r in adjacency if r == relation)
    return nxt


def executePath(graph: KnowledgeGraph, topic: int, path: Sequence[PathStep]) -> FrozenSet[int]:
    """
    Entities reached from `topic` by following a relation path.

    Intermediate frontiers may pass back through the topic; only the final
    answer set drops it.
    """
    frontier = {topic}
    for relationName, direction in path:
        frontier = _step(graph, frontier, graph.relationIndex[relationName], direction)
        if not frontier:
            break
    frontier.discard(topic)
    return frozenset(frontier)


class EligibleTopics:
    """Per-template topic entities with a nonempty, capped answer set."""

    def __init__(self, graph: KnowledgeGraph, maxAnswers: int):
        self.graph = graph
        self.maxAnswers = maxAnswers
        self._cache: Dict[str, Tuple[np.ndarray, List[FrozenSet[int]]]] = {}

    def get(self, template: QuestionTemplate) -> Tuple[np.ndarray, List[FrozenSet[int]]]:
        if template.typeId not in self._cache:
            relationName, direction = template.path[0]
            if relationName not in self.graph.relationIndex:
                raise TemplateCoverageError(f"graph has no relation {relationName!r} for template {template.typeId}")
            relation = self.graph.relationIndex[relationName]
            topics, answers = [], []
            for e in range(self.graph.numEntities):
                adjacency = self.graph.outAdj[e] if direction is Direction.FORWARD else self.graph.inAdj[e]
                if not any(r == relation for _, r in adjacency):
                    continue
                result = executePath(self.graph, e, template.path)
                if 1 <= len(result) <= self.maxAnswers:
                    topics.append(e)
                    answers.append(result)
            if not topics:
                raise TemplateCoverageError(f"no eligible topic entity for template {template.typeId}")
            self._cache[template.typeId] = (np.array(topics, dtype=np.int64), answers)
        return self._cache[template.typeId]


def generateQuestions(
    graph: KnowledgeGraph,
    templates: Sequence[QuestionTemplate],
    hops: int,
    count: int,
    labelFraction: float,
    rng: np.random.Generator,
    maxAnswers: int = 50,
    maxRetries: int = 50,
    matcher: Optional[NameMatcher] = None
) -> List[QAItem]:
    """
    Sample templated questions with exhaustively executed answer sets.

    Args:
        graph: Knowledge graph to ask about
        templates: Question types, all with `hops` relations
        hops: Hop count of every generated item
        count: Number of items
        labelFraction: Exactly ceil(labelFraction * count) items keep their topic label
        rng: Generator for template, topic, pattern and label choices
        maxAnswers: Topics with more answers than this are never sampled
        maxRetries: Attempts per item before giving up on ambiguous wording
        matcher: Entity-name matcher (built from the graph when omitted)

    Returns:
        QAItems in generation order
    """
    for template in templates:
        if template.hops != hops:
            raise ValueError(f"template {template.typeId} has {template.hops} hops, expected {hops}")
    if not templates:
        raise TemplateCoverageError(f"no {hops}-hop templates")

    matcher = matcher or NameMatcher(graph.entityNames)
    eligible = EligibleTopics(graph, maxAnswers)
    items: List[QAItem] = []
    dropped = 0

    for _ in range(count):
        for _attempt in range(maxRetries):
            template = templates[int(rng.integers(len(templates)))]
            topics, answerSets = eligible.get(template)
            pick = int(rng.integers(len(topics)))
            topic = int(topics[pick])
            text = template.render(int(rng.integers(len(template.patterns))), graph.entityNames[topic])
            labeled = matcher.label(text)
            if labeled.ambiguous or not labeled.spans or graph.entityIndex[labeled.names[0]] != topic:
                dropped += 1
                continue
            items.append(QAItem(
                tokens=labeled.tokens,
                answers=tuple(sorted(answerSets[pick])),
                hops=hops,
                typeId=template.typeId,
                topicEntity=topic,
                sourceEntity=topic,
                mentionSpan=labeled.spans[0],
            ))
            break
        else:
            raise TemplateCoverageError(f"no unambiguous {hops}-hop question after {maxRetries} attempts")

    limitLabels(items, labelFraction, rng)
    if dropped:
        logger.debug(f"Dropped {dropped} ambiguous {hops}-hop questions")
    logger.info(f"Generated {len(items)} {hops}-hop questions ({sum(i.isLabeled for i in items)} labeled)")
    return items


def limitLabels(items: List[QAItem], labelFraction: float, rng: np.random.Generator) -> None:
    """Keep the topic label on exactly ceil(labelFraction * n) randomly chosen items."""
    keep = labelCount(len(items), labelFraction)
    chosen = set(rng.choice(len(items), size=keep, replace=False).tolist()) if keep else set()
    for i, item in enumerate(items):
        if i not in chosen:
            item.topicEntity = None


def labelCount(n: int, labelFraction: float) -> int:
    # Rounded first so 0.07 * 100 counts as 7, not 8.
    return min(n, math.ceil(round(labelFraction * n, 9)))
