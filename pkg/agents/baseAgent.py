import logging
from abc import ABC, abstractmethod
from typing import Any, List, Optional

import numpy as np

from datagen.qaItem import QAItem
from model.context import ModelContext

logger = logging.getLogger(__name__)


class BaseAgent(ABC):
    """Base class for the pipeline agents working over one graph and vocabulary."""

    def __init__(self, name: str, context: ModelContext):
        self.name = name
        self.context = context
        logger.info(
            f"Agent '{self.name}' initialized "
            f"(|V|={context.graph.numEntities}, |R|={context.graph.numRelations}, T={context.hops})"
        )

    def encode(self, item: QAItem) -> np.ndarray:
        """Question token ids; raises on a question with no tokens."""
        q = self.context.vocab.encode(item.tokens)
        if len(q) == 0:
            raise ValueError(f"empty question: {item.text!r}")
        return q

    def batches(self, items: List[QAItem], batchSize: int, rng: Optional[np.random.Generator] = None):
        """Yield consecutive batches, in a fresh random order when rng is given."""
        order = rng.permutation(len(items)) if rng is not None else np.arange(len(items))
        for start in range(0, len(order), batchSize):
            yield [items[i] for i in order[start:start + batchSize]]

    @abstractmethod
    def run(self, *args, **kwargs) -> Any:
        """Execute the agent's main task."""
        pass
