"""
Forward kernels of the reasoning network.

Every distribution is computed in the log domain (float64) and returned as
a Distribution over an explicit entity support:

    topic      P(y | q)     softmax over all of V(G) of W_y . f_ent(q)
    answer     P(a | y, q)  softmax over scope(y) of f_qt(q) . g(y -> a)
    posterior  Q(y | q, a)  softmax over scope(a) of W~_y . f~_ent(q) + f~_qt(q) . g~(a -> y)

g is the forward reasoning-graph embedding: zero at the source, and at every
other node the mean over its parent edges of ReLU(V [g(parent), e_r]),
computed hop by hop in one pass over the scope.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy.special import log_softmax

from knowledge.scope import Scope

from .context import ModelContext
from .params import NAME_BOW, EmbeddingTable, PosteriorParams, ReasoningParams, RecognitionParams


@dataclass
class Distribution:
    support: np.ndarray
    logProbs: np.ndarray
    _positions: Optional[Dict[int, int]] = field(default=None, repr=False, compare=False)

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.logProbs)

    def __len__(self) -> int:
        return len(self.support)

    def position(self, entity: int) -> int:
        if self._positions is None:
            self._positions = {int(e): i for i, e in enumerate(self.support)}
        return self._positions.get(int(entity), -1)

    def logProbOf(self, entity: int) -> float:
        pos = self.position(entity)
        return float(self.logProbs[pos]) if pos >= 0 else -np.inf

    def ranked(self) -> np.ndarray:
        """Support positions by descending probability, ties by lower entity id."""
        return np.lexsort((self.support, -self.logProbs))

    def argmax(self) -> int:
        return int(self.support[self.ranked()[0]])

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """I.i.d. draws (with replacement) of entity ids."""
        probs = self.probs
        return self.support[rng.choice(len(self.support), size=size, replace=True, p=probs / probs.sum())]


@dataclass
class NodeEmbeddings:
    """g(y -> a) for every node of one scope, plus the pre-activations backprop needs."""

    scope: Scope
    values: np.ndarray
    preActivations: List[np.ndarray]
    columns: List[np.ndarray]
    visits: int


def embedQuestion(table: EmbeddingTable, q: np.ndarray) -> np.ndarray:
    """
    Mean bag-of-words question embedding.

    Args:
        table: Token embedding table
        q: Token ids, repeated tokens counted with multiplicity

    Returns:
        d-vector
    """
    if len(q) == 0:
        raise ValueError("empty question")
    return table[q].mean(axis=0)


def entityWeight(recognition: RecognitionParams, y: int, context: ModelContext) -> np.ndarray:
    """W_y: mean of the entity's name-token rows, or its free row."""
    context.graph.checkEntity(y)
    if recognition.mode != NAME_BOW:
        return recognition.freeW[y]
    ids = context.names.tokenIds[y]
    if len(ids) == 0:
        raise ValueError(f"entity {context.graph.entityNames[y]!r} has an empty name")
    return recognition.nameTokens[ids].mean(axis=0)


def entityWeightRows(recognition: RecognitionParams, entities: Optional[np.ndarray], context: ModelContext) -> np.ndarray:
    """W_y stacked for the given entities (all entities when None)."""
    if recognition.mode != NAME_BOW:
        return recognition.freeW if entities is None else recognition.freeW[entities]
    if context.names.hasEmpty:
        raise ValueError("name-bow recognition needs a non-empty name for every entity")
    averager = context.names.averager if entities is None else context.names.rows(entities)
    return np.asarray(averager @ recognition.nameTokens)


def topicDistribution(recognition: RecognitionParams, q: np.ndarray, context: ModelContext) -> Distribution:
    """P_theta1(y | q) over every entity of the graph."""
    f = embedQuestion(recognition.entTokens, q)
    logits = entityWeightRows(recognition, None, context) @ f
    return Distribution(np.arange(context.graph.numEntities), log_softmax(logits))


def forwardPropagate(reasoning: ReasoningParams, scope: Scope) -> NodeEmbeddings:
    """
    Joint embedding of every reasoning graph in a scope.

    Args:
        reasoning: θ2 (or ψ's inverse side)
        scope: Hop-ordered scope

    Returns:
        NodeEmbeddings with the source row exactly zero
    """
    reasoning.checkShapes()
    d = reasoning.dim
    vNode, vRelT = reasoning.vNode, reasoning.vRel.T
    values = np.zeros((len(scope), d))
    preActivations, columns = [], []
    visits = 1

    for level in scope.levels:
        hidden = values[level.parentStart:level.parentEnd] @ vNode.T
        cols = reasoning.relationColumns(level.relations, level.directions)
        pre = hidden[level.parentPos - level.parentStart] + vRelT[cols]
        summed = np.zeros((level.nodeEnd - level.nodeStart, d))
        np.add.at(summed, level.childPos - level.nodeStart, np.maximum(pre, 0.0))
        values[level.nodeStart:level.nodeEnd] = summed / scope.parentCounts[level.nodeStart:level.nodeEnd, None]
        preActivations.append(pre)
        columns.append(cols)
        visits += (level.nodeEnd - level.nodeStart) + len(level.childPos)

    return NodeEmbeddings(scope, values, preActivations, columns, visits)


def answerDistribution(
    reasoning: ReasoningParams,
    q: np.ndarray,
    scope: Scope,
    embeddings: Optional[NodeEmbeddings] = None
) -> Distribution:
    """P_theta2(a | y, q) over the nodes of scope(y)."""
    if embeddings is None:
        embeddings = forwardPropagate(reasoning, scope)
    logits = embeddings.values @ embedQuestion(reasoning.qtTokens, q)
    return Distribution(scope.entities, log_softmax(logits))


def posteriorLogits(posterior: PosteriorParams, q: np.ndarray, scope: Scope, context: ModelContext) -> np.ndarray:
    """Unnormalized log Q(y | q, a) for every y in scope(a)."""
    recognition = entityWeightRows(posterior.recognition, scope.entities, context) @ embedQuestion(posterior.recognition.entTokens, q)
    inverse = forwardPropagate(posterior.reasoning, scope).values @ embedQuestion(posterior.reasoning.qtTokens, q)
    return recognition + inverse


def posteriorDistribution(posterior: PosteriorParams, q: np.ndarray, a: int, context: ModelContext) -> Distribution:
    """
    Variational posterior Q_psi(y | q, a).

    Args:
        posterior: ψ
        q: Question token ids
        a: Answer entity
        context: Graph, names and the scope cache (hop budget T)

    Returns:
        Distribution over scope(a, T); a itself is always in the support
    """
    context.graph.checkEntity(a)
    scope = context.scopes.get(a)
    return Distribution(scope.entities, log_softmax(posteriorLogits(posterior, q, scope, context)))
