from dataclasses import dataclass, replace
from typing import Sequence, Tuple

import numpy as np


@dataclass(frozen=True)
class LearningSignalState:
    """Moving-average mean and std of the REINFORCE learning signal."""

    muTilde: float = 0.0
    sigmaTilde: float = 1.0
    decay: float = 0.9
    floor: float = 1e-4


def normalizeSignal(state: LearningSignalState, aBatch: Sequence[float]) -> Tuple[np.ndarray, LearningSignalState]:
    """
    Center and scale a batch of learning signals.

    Args:
        state: Current moving averages
        aBatch: Learning signals A of the batch (nonempty)

    Returns:
        (normalized signals (A - mu) / sigma, updated state); the update is an
        exponential moving average of the batch mean and std, applied before
        normalizing
    """
    values = np.asarray(aBatch, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empty learning-signal batch")
    mu = state.decay * state.muTilde + (1.0 - state.decay) * float(values.mean())
    sigma = state.decay * state.sigmaTilde + (1.0 - state.decay) * float(values.std())
    updated = replace(state, muTilde=mu, sigmaTilde=max(sigma, state.floor))
    return (values - updated.muTilde) / updated.sigmaTilde, updated
