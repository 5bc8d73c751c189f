import logging
import math
from typing import List, Sequence

import numpy as np

from .qaItem import DatasetSplit, QAItem

logger = logging.getLogger(__name__)


def splitDataset(items: Sequence[QAItem], ratios: Sequence[float], rng: np.random.Generator) -> DatasetSplit:
    """
    Seeded shuffle, then partition into train / validation / test.

    Validation and test get floor(ratio * n) items; the remainder goes to train.
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios) or not math.isclose(sum(ratios), 1.0, abs_tol=1e-9):
        raise ValueError(f"split ratios must be three non-negative numbers summing to 1, got {list(ratios)}")
    n = len(items)
    order = rng.permutation(n)
    validationSize = math.floor(round(ratios[1] * n, 9))
    testSize = math.floor(round(ratios[2] * n, 9))
    trainSize = n - validationSize - testSize
    shuffled: List[QAItem] = [items[i] for i in order]
    split = DatasetSplit(
        train=shuffled[:trainSize],
        validation=shuffled[trainSize:trainSize + validationSize],
        test=shuffled[trainSize + validationSize:],
    )
    logger.info(f"Split {n} items: train={len(split.train)}, validation={len(split.validation)}, test={len(split.test)}")
    return split
