from typing import Dict, Optional, Tuple

import numpy as np

from .gradients import GradientSet, applyGradients


class BaselineNet:
    """
    Two-layer perceptron b(q, a) fitting the normalized learning signal.

    Input is the one-hot answer entity concatenated with the question's
    bag-of-words counts; hidden layer uses tanh. The output layer starts at
    zero, so an untrained baseline predicts 0.
    """

    def __init__(
        self,
        numEntities: int,
        vocabSize: int,
        hidden: int = 64,
        rng: Optional[np.random.Generator] = None,
        initScale: float = 0.08
    ):
        self.numEntities = numEntities
        self.vocabSize = vocabSize
        inputWidth = numEntities + vocabSize
        if rng is None:
            self.w1 = np.zeros((hidden, inputWidth))
        else:
            self.w1 = rng.uniform(-initScale, initScale, size=(hidden, inputWidth))
        self.b1 = np.zeros(hidden)
        self.w2 = np.zeros(hidden)
        self.b2 = np.zeros(1)

    @property
    def inputWidth(self) -> int:
        return self.w1.shape[1]

    def blocks(self) -> Dict[str, np.ndarray]:
        return {"baseline.w1": self.w1, "baseline.b1": self.b1, "baseline.w2": self.w2, "baseline.b2": self.b2}

    @classmethod
    def fromBlocks(cls, numEntities: int, vocabSize: int, blocks: Dict[str, np.ndarray]) -> "BaselineNet":
        net = cls(numEntities, vocabSize, hidden=blocks["baseline.b1"].shape[0])
        net.w1, net.b1, net.w2, net.b2 = (blocks[k] for k in ("baseline.w1", "baseline.b1", "baseline.w2", "baseline.b2"))
        if net.w1.shape[1] != numEntities + vocabSize:
            raise ValueError(f"baseline input width {net.w1.shape[1]} != |V| + vocab {numEntities + vocabSize}")
        return net

    def _tokenColumns(self, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        tokens, counts = np.unique(q, return_counts=True)
        return self.numEntities + tokens, counts.astype(np.float64)

    def _hidden(self, q: np.ndarray, a: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        columns, counts = self._tokenColumns(q)
        pre = self.w1[:, a] + self.w1[:, columns] @ counts + self.b1
        return np.tanh(pre), columns, counts

    def predict(self, q: np.ndarray, a: int) -> float:
        hidden, _, _ = self._hidden(q, a)
        return float(self.w2 @ hidden + self.b2[0])

    def gradients(self, q: np.ndarray, a: int, target: float) -> Tuple[float, float, GradientSet]:
        """
        Square loss (b(q, a) - target)^2 and its gradient.

        Returns:
            (prediction, loss, GradientSet of the loss)
        """
        hidden, columns, counts = self._hidden(q, a)
        prediction = float(self.w2 @ hidden + self.b2[0])
        diff = prediction - target
        grads = GradientSet(self.blocks())
        dOut = 2.0 * diff
        grads["baseline.w2"][:] = dOut * hidden
        grads["baseline.b2"][0] = dOut
        dPre = dOut * self.w2 * (1.0 - hidden ** 2)
        grads["baseline.b1"][:] = dPre
        grads["baseline.w1"][:, a] += dPre
        grads["baseline.w1"][:, columns] += np.outer(dPre, counts)
        return prediction, diff ** 2, grads

    def step(self, q: np.ndarray, a: int, target: float, learningRate: float) -> float:
        """One gradient step on the square loss; returns the prediction before the update."""
        prediction, _, grads = self.gradients(q, a, target)
        grads.check(f"baseline a={a}")
        applyGradients(self.blocks(), grads, -learningRate)
        return prediction
