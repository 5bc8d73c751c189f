import logging
from typing import Dict, List, Optional

import numpy as np

from config.settings import TrainConfig
from datagen.qaItem import QAItem
from model.context import ModelContext
from model.gradients import GradientSet, answerGradient, applyGradients, oneHot, posteriorGradient, topicGradient
from model.params import VrnParams

from .baseAgent import BaseAgent

logger = logging.getLogger(__name__)


class PretrainAgent(BaseAgent):
    """Supervised initialization of θ1, θ2 and ψ from the topic-labeled questions."""

    def __init__(self, context: ModelContext, params: VrnParams, trainConfig: TrainConfig):
        super().__init__(name="PretrainAgent", context=context)
        self.params = params
        self.trainConfig = trainConfig

    def run(self, labeled: List[QAItem], rng: np.random.Generator) -> VrnParams:
        """
        Cross-entropy pretraining on labeled questions.

        θ1 learns the topic label, ψ learns the label given one gold answer,
        and θ2 learns that answer given the labeled topic. One gold answer is
        drawn per item per visit.

        Args:
            labeled: Items carrying topic labels
            rng: Generator for shuffling and answer draws ("pretrain" stream)

        Returns:
            The updated parameters (modified in place)
        """
        if not labeled:
            raise ValueError("pretraining needs at least one topic-labeled question")
        graph = self.context.graph
        for item in labeled:
            if item.topicEntity is None:
                raise ValueError(f"unlabeled item passed to pretraining: {item.text!r}")
            graph.checkEntity(item.topicEntity)

        cfg = self.trainConfig
        logger.info(f"Pretraining on {len(labeled)} labeled questions for {cfg.pretrainEpochs} epochs")
        for epoch in range(1, cfg.pretrainEpochs + 1):
            totals = {"topic": 0.0, "posterior": 0.0, "answer": 0.0}
            skipped = 0
            for batch in self.batches(labeled, cfg.batchSize, rng):
                grads = GradientSet(self.params.blocks())
                for item in batch:
                    losses = self._accumulate(item, rng, grads)
                    if losses is None:
                        skipped += 1
                        continue
                    for key, value in losses.items():
                        totals[key] += value
                grads.check(f"pretrain epoch {epoch}")
                applyGradients(self.params.blocks(), grads, cfg.learningRate / len(batch))

            n = len(labeled)
            logger.info(
                f"Pretrain epoch {epoch}/{cfg.pretrainEpochs}: "
                f"topic CE {totals['topic'] / n:.4f}, posterior CE {totals['posterior'] / n:.4f}, "
                f"answer CE {totals['answer'] / n:.4f}"
            )
            if skipped:
                logger.warning(f"{skipped} labeled items had no answer within {self.context.hops} hops of the topic")
        return self.params

    def _accumulate(self, item: QAItem, rng: np.random.Generator, grads: GradientSet) -> Optional[Dict[str, float]]:
        q = self.encode(item)
        y = item.topicEntity
        a = int(item.answers[int(rng.integers(len(item.answers)))])
        topicScope = self.context.scopes.get(y)
        if not topicScope.contains(a):
            return None

        numEntities = self.context.graph.numEntities
        logP1 = topicGradient(self.params.recognition, q, oneHot(numEntities, y), self.context, grads)
        answerScope = self.context.scopes.get(a)
        logQ = posteriorGradient(
            self.params.posterior, q, a, oneHot(len(answerScope), answerScope.position(y)), self.context, grads
        )
        logP2 = answerGradient(
            self.params.reasoning, q, topicScope, oneHot(len(topicScope), topicScope.position(a)), grads
        )
        return {
            "topic": -float(logP1[y]),
            "posterior": -float(logQ[answerScope.position(y)]),
            "answer": -float(logP2[topicScope.position(a)]),
        }
