import logging
from typing import Optional, Tuple

import numpy as np
from scipy.special import log_softmax, logsumexp

from .context import ModelContext
from .gradients import GradientError
from .kernels import Distribution, answerDistribution, posteriorDistribution, topicDistribution
from .params import VrnParams

logger = logging.getLogger(__name__)


class AnswerUnreachableError(ValueError):
    """No topic entity has the answer within its scope."""


def answerLogProb(params: VrnParams, context: ModelContext, q: np.ndarray, y: int, a: int) -> float:
    """log P_theta2(a | y, q); -inf when a lies outside scope(y)."""
    return answerDistribution(params.reasoning, q, context.scopes.get(y)).logProbOf(a)


def jointLogScores(params: VrnParams, context: ModelContext, q: np.ndarray, a: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    log P_theta1(y|q) and log P_theta2(a|y,q) for every y that can reach a.

    By scope symmetry those y are exactly the nodes of scope(a).

    Returns:
        (entities, logP1, logP2)
    """
    entities = context.scopes.get(a).entities
    topic = topicDistribution(params.recognition, q, context)
    logP1 = topic.logProbs[entities]
    logP2 = np.array([answerLogProb(params, context, q, int(y), a) for y in entities])
    return entities, logP1, logP2


def learningSignal(params: VrnParams, context: ModelContext, q: np.ndarray, a: int, y: int,
                   logQ: Optional[float] = None) -> float:
    """
    A(y, q, a) = log P_theta1(y|q) + log P_theta2(a|y,q) - log Q_psi(y|q,a).

    Args:
        logQ: Precomputed log Q_psi(y|q,a), recomputed when omitted
    """
    logP1 = topicDistribution(params.recognition, q, context).logProbOf(y)
    logP2 = answerLogProb(params, context, q, y, a)
    if logQ is None:
        logQ = posteriorDistribution(params.posterior, q, a, context).logProbOf(y)
    signal = logP1 + logP2 - logQ
    if not np.isfinite(signal):
        raise GradientError(f"non-finite learning signal for y={y}, a={a}")
    return float(signal)


def exactPosterior(params: VrnParams, context: ModelContext, q: np.ndarray, a: int) -> Distribution:
    """P(y | q, a) proportional to P_theta1(y|q) P_theta2(a|y,q), by enumeration over scope(a)."""
    entities, logP1, logP2 = jointLogScores(params, context, q, a)
    return Distribution(entities, log_softmax(logP1 + logP2))


def marginalLoglik(params: VrnParams, context: ModelContext, q: np.ndarray, a: int) -> float:
    """log sum_y P_theta1(y|q) P_theta2(a|y,q)."""
    _, logP1, logP2 = jointLogScores(params, context, q, a)
    value = float(logsumexp(logP1 + logP2)) if len(logP1) else -np.inf
    if not np.isfinite(value):
        raise AnswerUnreachableError(f"answer {a} unreachable within {context.hops} hops")
    return value


def elboFromPosterior(params: VrnParams, context: ModelContext, q: np.ndarray, a: int, posterior: Distribution) -> float:
    """E_Q[log P_theta1(y|q) + log P_theta2(a|y,q) - log Q(y)] by exact enumeration of Q's support."""
    entities, logP1, logP2 = jointLogScores(params, context, q, a)
    logQ = np.array([posterior.logProbOf(int(y)) for y in entities])
    mask = np.isfinite(logQ)
    probs = np.exp(logQ[mask])
    return float(probs @ (logP1[mask] + logP2[mask] - logQ[mask]))


def elbo(params: VrnParams, context: ModelContext, q: np.ndarray, a: int) -> float:
    """Evidence lower bound under the learned posterior Q_psi."""
    return elboFromPosterior(params, context, q, a, posteriorDistribution(params.posterior, q, a, context))
