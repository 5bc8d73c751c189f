"""
Exact reverse-mode gradients of the log-probability families.

All functions accumulate into a GradientSet the gradient of
`sum_j weight_j * log p(target_j)`, so one call can fold several Monte Carlo
samples that share a softmax. Signs are for ascent on log-likelihoods; the
baseline's square loss lives with the baseline network.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Mapping, Optional

import numpy as np
from scipy.special import log_softmax

from knowledge.scope import Scope

from .context import ModelContext
from .kernels import NodeEmbeddings, embedQuestion, entityWeightRows, forwardPropagate
from .params import NAME_BOW, PosteriorParams, ReasoningParams, RecognitionParams, VrnParams

logger = logging.getLogger(__name__)


class GradientError(FloatingPointError):
    """NaN or Inf found in a gradient block."""


class GradientSet:
    """Named gradient block per parameter block, same shapes."""

    def __init__(self, blocks: Mapping[str, np.ndarray]):
        self.blocks: Dict[str, np.ndarray] = {name: np.zeros_like(block) for name, block in blocks.items()}

    def __getitem__(self, name: str) -> np.ndarray:
        return self.blocks[name]

    def __setitem__(self, name: str, value: np.ndarray) -> None:
        self.blocks[name] = value

    def __iter__(self):
        return iter(self.blocks)

    def scale(self, factor: float) -> None:
        for block in self.blocks.values():
            block *= factor

    def add(self, other: "GradientSet", factor: float = 1.0) -> None:
        for name, block in other.blocks.items():
            self.blocks[name] += factor * block

    def flat(self) -> np.ndarray:
        return np.concatenate([b.ravel() for b in self.blocks.values()])

    def check(self, diagnostics: str = "") -> None:
        """Raise GradientError naming every block with non-finite entries."""
        bad = {name: int((~np.isfinite(b)).sum()) for name, b in self.blocks.items() if not np.all(np.isfinite(b))}
        if bad:
            detail = ", ".join(f"{name}: {count} non-finite" for name, count in bad.items())
            raise GradientError(f"non-finite gradient ({detail}){' ' + diagnostics if diagnostics else ''}")


def applyGradients(blocks: Mapping[str, np.ndarray], grads: GradientSet, stepSize: float) -> None:
    """In-place update block += stepSize * grad (ascent for positive stepSize)."""
    for name, block in blocks.items():
        block += stepSize * grads[name]


def _accumulateQuestion(gradTable: np.ndarray, q: np.ndarray, dEmbedding: np.ndarray) -> None:
    np.add.at(gradTable, q, dEmbedding / len(q))


def _recognitionBackward(
    recognition: RecognitionParams,
    q: np.ndarray,
    entities: Optional[np.ndarray],
    f: np.ndarray,
    weights: np.ndarray,
    dLogits: np.ndarray,
    context: ModelContext,
    grads: GradientSet
) -> None:
    """Backprop of logits = W[entities] . f_ent(q)."""
    dWeights = np.outer(dLogits, f)
    if recognition.mode == NAME_BOW:
        averager = context.names.averager if entities is None else context.names.rows(entities)
        grads[recognition.nameKey] += np.asarray(averager.T @ dWeights)
    elif entities is None:
        grads[recognition.freeKey] += dWeights
    else:
        np.add.at(grads[recognition.freeKey], entities, dWeights)
    _accumulateQuestion(grads[recognition.entKey], q, weights.T @ dLogits)


def backpropagate(reasoning: ReasoningParams, embeddings: NodeEmbeddings, dValues: np.ndarray, grads: GradientSet) -> None:
    """
    Reverse pass of forwardPropagate.

    Args:
        reasoning: Parameters used in the forward pass
        embeddings: Forward result (values and cached pre-activations)
        dValues: Gradient w.r.t. every node embedding; consumed in place
        grads: Receives the V gradient
    """
    scope = embeddings.scope
    d = reasoning.dim
    vNode = reasoning.vNode
    dV = grads[reasoning.vKey]
    dRelT = np.zeros((reasoning.relationWidth, d))

    for level, pre, cols in reversed(list(zip(scope.levels, embeddings.preActivations, embeddings.columns))):
        dChild = dValues[level.nodeStart:level.nodeEnd] / scope.parentCounts[level.nodeStart:level.nodeEnd, None]
        dPre = dChild[level.childPos - level.nodeStart] * (pre > 0.0)
        np.add.at(dRelT, cols, dPre)
        dHidden = np.zeros((level.parentEnd - level.parentStart, d))
        np.add.at(dHidden, level.parentPos - level.parentStart, dPre)
        dV[:, :d] += dHidden.T @ embeddings.values[level.parentStart:level.parentEnd]
        dValues[level.parentStart:level.parentEnd] += dHidden @ vNode

    dV[:, d:] += dRelT.T


def topicGradient(
    recognition: RecognitionParams,
    q: np.ndarray,
    targetWeights: np.ndarray,
    context: ModelContext,
    grads: GradientSet
) -> np.ndarray:
    """
    Gradient of sum_y targetWeights[y] * log P_theta1(y | q).

    Returns:
        Log-probabilities over all entities (forward by-product)
    """
    f = embedQuestion(recognition.entTokens, q)
    weights = entityWeightRows(recognition, None, context)
    logProbs = log_softmax(weights @ f)
    probs = np.exp(logProbs)
    dLogits = targetWeights - targetWeights.sum() * probs
    _recognitionBackward(recognition, q, None, f, weights, dLogits, context, grads)
    return logProbs


def answerGradient(
    reasoning: ReasoningParams,
    q: np.ndarray,
    scope: Scope,
    targetWeights: np.ndarray,
    grads: GradientSet,
    embeddings: Optional[NodeEmbeddings] = None
) -> np.ndarray:
    """
    Gradient of sum_a targetWeights[pos(a)] * log P_theta2(a | y, q) over one scope.

    Returns:
        Log-probabilities over the scope nodes
    """
    if embeddings is None:
        embeddings = forwardPropagate(reasoning, scope)
    fqt = embedQuestion(reasoning.qtTokens, q)
    logProbs = log_softmax(embeddings.values @ fqt)
    probs = np.exp(logProbs)
    dLogits = targetWeights - targetWeights.sum() * probs
    _accumulateQuestion(grads[reasoning.qtKey], q, embeddings.values.T @ dLogits)
    backpropagate(reasoning, embeddings, np.outer(dLogits, fqt), grads)
    return logProbs


def posteriorGradient(
    posterior: PosteriorParams,
    q: np.ndarray,
    a: int,
    targetWeights: np.ndarray,
    context: ModelContext,
    grads: GradientSet
) -> np.ndarray:
    """
    Gradient of sum_y targetWeights[pos(y)] * log Q_psi(y | q, a) over scope(a).

    Returns:
        Log-probabilities over scope(a)
    """
    scope = context.scopes.get(a)
    fEnt = embedQuestion(posterior.recognition.entTokens, q)
    weights = entityWeightRows(posterior.recognition, scope.entities, context)
    embeddings = forwardPropagate(posterior.reasoning, scope)
    fqt = embedQuestion(posterior.reasoning.qtTokens, q)
    logProbs = log_softmax(weights @ fEnt + embeddings.values @ fqt)
    probs = np.exp(logProbs)
    dLogits = targetWeights - targetWeights.sum() * probs

    _recognitionBackward(posterior.recognition, q, scope.entities, fEnt, weights, dLogits, context, grads)
    _accumulateQuestion(grads[posterior.reasoning.qtKey], q, embeddings.values.T @ dLogits)
    backpropagate(posterior.reasoning, embeddings, np.outer(dLogits, fqt), grads)
    return logProbs


def oneHot(size: int, position: int, weight: float = 1.0) -> np.ndarray:
    vec = np.zeros(size)
    vec[position] = weight
    return vec


@dataclass
class LossSpec:
    """
    One differentiable objective.

    kind: "topic" (log P(y|q)), "answer" (log P(a|y,q)), "posterior"
    (log Q(y|q,a)) or "baseline" ((b(q,a) - target)^2, needs `baseline`).
    """

    kind: str
    q: np.ndarray
    y: Optional[int] = None
    a: Optional[int] = None
    target: float = 0.0
    baseline: Optional[Any] = None


def gradients(spec: LossSpec, params: Optional[VrnParams], context: ModelContext) -> GradientSet:
    """
    Exact gradient of one loss with respect to every parameter block it touches.

    Args:
        spec: Which loss and its arguments
        params: Current parameters (unused for the baseline loss)
        context: Graph, names and scopes

    Returns:
        GradientSet over params.blocks() (baseline blocks for the baseline
        loss); untouched blocks are zero
    """
    if spec.kind == "baseline":
        _, _, grads = spec.baseline.gradients(spec.q, spec.a, spec.target)
    else:
        grads = GradientSet(params.blocks())
        if spec.kind == "topic":
            topicGradient(params.recognition, spec.q, oneHot(context.graph.numEntities, spec.y), context, grads)
        elif spec.kind == "answer":
            scope = context.scopes.get(spec.y)
            answerGradient(params.reasoning, spec.q, scope, oneHot(len(scope), scope.position(spec.a)), grads)
        elif spec.kind == "posterior":
            scope = context.scopes.get(spec.a)
            posteriorGradient(params.posterior, spec.q, spec.a, oneHot(len(scope), scope.position(spec.y)), context, grads)
        else:
            raise ValueError(f"unknown loss kind: {spec.kind}")
    grads.check(f"loss={spec.kind} y={spec.y} a={spec.a}")
    return grads
