import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from config.settings import InferenceConfig
from datagen.qaItem import QAItem
from knowledge.kgStore import Direction, KnowledgeGraph
from model.context import ModelContext
from model.kernels import answerDistribution, embedQuestion, forwardPropagate, topicDistribution
from model.params import VrnParams

from .baseAgent import BaseAgent

logger = logging.getLogger(__name__)


@dataclass
class CandidateRow:
    topic: int
    logP1: float
    bestAnswer: int
    logP2: float


@dataclass
class AnswerResult:
    answer: int
    topic: int
    score: float
    candidates: List[CandidateRow] = field(default_factory=list)


@dataclass(frozen=True)
class PathEdge:
    source: int
    relation: int
    direction: Direction
    target: int


@dataclass
class ReasonPath:
    """Edges from the topic entity to the answer, in traversal order."""

    topic: int
    answer: int
    edges: List[PathEdge] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.edges)

    def format(self, graph: KnowledgeGraph) -> str:
        """`entity -[relation,dir]-> entity -[...]-> entity`."""
        names = graph.entityNames
        parts = [names[self.topic]]
        for edge in self.edges:
            parts.append(f"-[{graph.relationNames[edge.relation]},{edge.direction.arrow}]-> {names[edge.target]}")
        return " ".join(parts)


class InferenceAgent(BaseAgent):
    """Beam inference over topic entities and reasoning-path inspection."""

    def __init__(self, context: ModelContext, params: VrnParams, inferenceConfig: InferenceConfig):
        super().__init__(name="InferenceAgent", context=context.withHops(inferenceConfig.hops))
        self.params = params
        self.inferenceConfig = inferenceConfig

    def candidates(self, q: np.ndarray, topicLabel: Optional[int] = None) -> List[Tuple[int, float]]:
        """Top-k topic entities by P_θ1(y|q), or the label alone when labels are trusted."""
        topic = topicDistribution(self.params.recognition, q, self.context)
        if topicLabel is not None and self.inferenceConfig.useTopicLabels:
            return [(int(topicLabel), topic.logProbOf(topicLabel))]
        ranked = topic.ranked()[:self.inferenceConfig.beam]
        return [(int(topic.support[i]), float(topic.logProbs[i])) for i in ranked]

    def answer(self, q: np.ndarray, topicLabel: Optional[int] = None) -> AnswerResult:
        """
        Answer one question by beam search.

        Each candidate y contributes its best answer under P_θ2(a|y,q). The
        winner has the highest log P_θ2 (plus log P_θ1 with jointScore); ties
        go to the higher log P_θ1, then the lower topic entity id.

        Args:
            q: Question token ids
            topicLabel: Labeled topic entity, used only with useTopicLabels

        Returns:
            AnswerResult with the per-candidate table
        """
        rows = []
        for y, logP1 in self.candidates(q, topicLabel):
            dist = answerDistribution(self.params.reasoning, q, self.context.scopes.get(y))
            best = dist.argmax()
            rows.append(CandidateRow(topic=y, logP1=logP1, bestAnswer=best, logP2=dist.logProbOf(best)))

        def score(row: CandidateRow) -> float:
            return row.logP2 + row.logP1 if self.inferenceConfig.jointScore else row.logP2

        winner = min(rows, key=lambda row: (-score(row), -row.logP1, row.topic))
        return AnswerResult(answer=winner.bestAnswer, topic=winner.topic, score=score(winner), candidates=rows)

    def inspectPath(self, q: np.ndarray, y: int, a: int) -> ReasonPath:
        """
        Highest-scoring reasoning path from y to a.

        Walks back from the answer; at each node takes the parent edge whose
        message ReLU(V [g(parent), e_r]) has the largest dot product with
        f_qt(q), ties to the lower parent entity id. For a one-hop answer
        g(parent) is zero, so this scores edge types against the question.
        """
        scope = self.context.scopes.get(y)
        position = scope.position(a)
        reasoning = self.params.reasoning
        embeddings = forwardPropagate(reasoning, scope)
        fqt = embedQuestion(reasoning.qtTokens, q)

        edges: List[PathEdge] = []
        while scope.nodes[position].hop > 0:
            node = scope.nodes[position]
            best = None
            for edge in node.parents:
                col = reasoning.relationColumns(np.array([edge.relation]), np.array([int(edge.direction)]))[0]
                message = np.maximum(reasoning.vNode @ embeddings.values[edge.parent] + reasoning.vRel[:, col], 0.0)
                key = (-float(message @ fqt), int(scope.entities[edge.parent]))
                if best is None or key < best[0]:
                    best = (key, edge)
            edge = best[1]
            edges.append(PathEdge(int(scope.entities[edge.parent]), edge.relation, edge.direction, node.entity))
            position = edge.parent

        edges.reverse()
        return ReasonPath(topic=y, answer=a, edges=edges)

    def run(self, items: List[QAItem]) -> List[AnswerResult]:
        results = [self.answer(self.encode(item), item.topicEntity) for item in items]
        logger.info(f"Answered {len(results)} questions (beam {self.inferenceConfig.beam})")
        return results
