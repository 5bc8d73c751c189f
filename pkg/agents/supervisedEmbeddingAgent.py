import logging
from dataclasses import dataclass
from typing import List

import numpy as np
from scipy.special import log_softmax

from config.settings import EvalConfig, ModelConfig
from datagen.qaItem import QAItem
from model.context import ModelContext
from model.kernels import embedQuestion

from .baseAgent import BaseAgent

logger = logging.getLogger(__name__)


@dataclass
class SupervisedEmbeddingParams:
    tokenTable: np.ndarray
    entityTable: np.ndarray

    @property
    def dim(self) -> int:
        return self.tokenTable.shape[1]

    def checkShapes(self) -> None:
        if self.tokenTable.shape[1] != self.entityTable.shape[1]:
            raise ValueError(f"dimension mismatch: {self.tokenTable.shape[1]} vs {self.entityTable.shape[1]}")


class SupervisedEmbeddingAgent(BaseAgent):
    """
    Supervised-embedding baseline: score(q, a) = mean-BOW(q) . row(a),
    trained with softmax cross-entropy over all entities.
    """

    def __init__(self, context: ModelContext, modelConfig: ModelConfig, evalConfig: EvalConfig, rng: np.random.Generator):
        super().__init__(name="SupervisedEmbeddingAgent", context=context)
        self.evalConfig = evalConfig
        scale, d = modelConfig.initScale, modelConfig.dim
        self.params = SupervisedEmbeddingParams(
            tokenTable=rng.uniform(-scale, scale, size=(len(context.vocab), d)),
            entityTable=rng.uniform(-scale, scale, size=(context.graph.numEntities, d)),
        )

    def scores(self, q: np.ndarray) -> np.ndarray:
        return self.params.entityTable @ embedQuestion(self.params.tokenTable, q)

    def predict(self, q: np.ndarray) -> int:
        """Highest-scoring entity, ties to the lower id."""
        return int(np.argmax(self.scores(q)))

    def run(self, trainItems: List[QAItem], rng: np.random.Generator) -> SupervisedEmbeddingParams:
        """
        SGD on log softmax(score(q, .))[a], one gold answer drawn per item per visit.

        Args:
            trainItems: Training questions
            rng: Shuffling and answer-draw generator
        """
        cfg = self.evalConfig
        lr = cfg.baselineLearningRate
        tokenTable, entityTable = self.params.tokenTable, self.params.entityTable
        for epoch in range(1, cfg.baselineEpochs + 1):
            totalLoss = 0.0
            for i in rng.permutation(len(trainItems)):
                item = trainItems[i]
                q = self.encode(item)
                a = int(item.answers[int(rng.integers(len(item.answers)))])
                f = embedQuestion(tokenTable, q)
                logProbs = log_softmax(entityTable @ f)
                totalLoss -= float(logProbs[a])
                dLogits = -np.exp(logProbs)
                dLogits[a] += 1.0
                df = entityTable.T @ dLogits
                entityTable += lr * np.outer(dLogits, f)
                np.add.at(tokenTable, q, lr * df / len(q))
            logger.info(f"Supervised embedding epoch {epoch}/{cfg.baselineEpochs}: CE {totalLoss / max(len(trainItems), 1):.4f}")
        self.params.checkShapes()
        return self.params
