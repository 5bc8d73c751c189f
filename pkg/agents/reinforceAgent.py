import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import TrainConfig
from datagen.qaItem import QAItem
from evaluation.metrics import entityAccuracy
from model.baselineNet import BaselineNet
from model.context import ModelContext
from model.gradients import GradientSet, answerGradient, applyGradients, oneHot, posteriorGradient, topicGradient
from model.kernels import answerDistribution, posteriorDistribution, topicDistribution
from model.params import VrnParams
from model.signalState import LearningSignalState, normalizeSignal
from utils.checkpointIo import Checkpoint, saveCheckpoint
from utils.csvWriter import writeCsv
from utils.seeding import childSeeds

from .baseAgent import BaseAgent

logger = logging.getLogger(__name__)

TRAINLOG_FIELDS = [
    "step", "epoch", "totalLoss", "thetaLoss", "psiLoss", "baselineLoss", "meanSignal", "elbo", "entityAccuracy",
]

Instance = Tuple[np.ndarray, int]


@dataclass
class InstanceSample:
    """M posterior draws for one (q, a) and the three log-probabilities of each."""

    q: np.ndarray
    a: int
    ys: np.ndarray
    logP1: np.ndarray
    logP2: np.ndarray
    logQ: np.ndarray

    @property
    def signals(self) -> np.ndarray:
        return self.logP1 + self.logP2 - self.logQ


@dataclass
class StepDiagnostics:
    step: int
    meanSignal: float
    elbo: float
    thetaLoss: float
    psiLoss: float
    baselineLoss: float

    @property
    def totalLoss(self) -> float:
        return self.thetaLoss + self.psiLoss + self.baselineLoss


@dataclass
class TrainResult:
    params: VrnParams
    baseline: BaselineNet
    signalState: LearningSignalState
    steps: int
    history: List[Dict[str, float]] = field(default_factory=list)


class ReinforceAgent(BaseAgent):
    """
    Joint variational training of θ1, θ2 and ψ.

    Each step samples topic entities from Q_ψ(y|q,a) for every instance of
    the batch (in parallel when workers > 1), then at a single barrier
    normalizes the learning signals, fits the baseline, reduces the
    gradients in batch order and takes one SGD ascent step.
    """

    def __init__(
        self,
        context: ModelContext,
        params: VrnParams,
        baseline: BaselineNet,
        trainConfig: TrainConfig,
        workers: int = 1,
        signalState: Optional[LearningSignalState] = None,
        step: int = 0
    ):
        super().__init__(name="ReinforceAgent", context=context)
        self.params = params
        self.baseline = baseline
        self.trainConfig = trainConfig
        self.workers = workers
        self.signalState = signalState or LearningSignalState(
            decay=trainConfig.decay, floor=trainConfig.sigmaFloor
        )
        self.step = step

    def _sampleInstance(self, instance: Instance, seed: int) -> InstanceSample:
        q, a = instance
        posterior = posteriorDistribution(self.params.posterior, q, a, self.context)
        ys = posterior.sample(np.random.default_rng(int(seed)), self.trainConfig.samples)
        topic = topicDistribution(self.params.recognition, q, self.context)
        answerLogProbs: Dict[int, float] = {}
        for y in np.unique(ys):
            scope = self.context.scopes.get(int(y))
            answerLogProbs[int(y)] = answerDistribution(self.params.reasoning, q, scope).logProbOf(a)
        return InstanceSample(
            q=q,
            a=a,
            ys=ys,
            logP1=topic.logProbs[ys],
            logP2=np.array([answerLogProbs[int(y)] for y in ys]),
            logQ=np.array([posterior.logProbOf(int(y)) for y in ys]),
        )

    def _describe(self, sample: InstanceSample, signals: np.ndarray) -> str:
        names = self.context.graph.entityNames
        tokens = " ".join(self.context.vocab.tokens[t] for t in sample.q)
        return f"q={tokens!r} a={names[sample.a]!r} ys={[names[y] for y in sample.ys]} A={signals.tolist()}"

    def reinforceStep(self, batch: Sequence[Instance], rng: np.random.Generator) -> StepDiagnostics:
        """
        One REINFORCE step over a batch of (question ids, answer) pairs.

        Args:
            batch: Instances; one gold answer already chosen per question
            rng: Source of the per-instance sampling seeds

        Returns:
            Diagnostics of the step (losses are batch means)
        """
        cfg = self.trainConfig
        numSamples = cfg.samples
        seeds = childSeeds(rng, len(batch))
        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                samples = list(pool.map(self._sampleInstance, batch, seeds))
        else:
            samples = [self._sampleInstance(instance, seed) for instance, seed in zip(batch, seeds)]

        rawSignals = np.concatenate([s.signals for s in samples])
        if cfg.varianceReduction:
            normalized, self.signalState = normalizeSignal(self.signalState, rawSignals)
        else:
            normalized = rawSignals

        grads = GradientSet(self.params.blocks())
        numEntities = self.context.graph.numEntities
        thetaLoss = psiLoss = baselineLoss = elbo = 0.0
        for i, sample in enumerate(samples):
            signal = normalized[i * numSamples:(i + 1) * numSamples]
            if cfg.varianceReduction:
                b = self.baseline.step(sample.q, sample.a, float(signal.mean()), cfg.baselineLearningRate)
                baselineLoss += float(np.mean((b - signal) ** 2))
            else:
                b = 0.0
            weights = (signal - b) / numSamples

            topicGradient(
                self.params.recognition, sample.q,
                np.bincount(sample.ys, minlength=numEntities) / numSamples, self.context, grads,
            )
            topics, counts = np.unique(sample.ys, return_counts=True)
            for y, count in zip(topics, counts):
                scope = self.context.scopes.get(int(y))
                answerGradient(
                    self.params.reasoning, sample.q, scope,
                    oneHot(len(scope), scope.position(sample.a), count / numSamples), grads,
                )
            answerScope = self.context.scopes.get(sample.a)
            psiWeights = np.zeros(len(answerScope))
            np.add.at(psiWeights, [answerScope.position(int(y)) for y in sample.ys], weights)
            posteriorGradient(self.params.posterior, sample.q, sample.a, psiWeights, self.context, grads)
            grads.check(self._describe(sample, sample.signals))

            thetaLoss -= float(np.mean(sample.logP1 + sample.logP2))
            psiLoss -= float(np.mean((signal - b) * sample.logQ))
            elbo += float(np.mean(sample.signals))

        grads.scale(1.0 / len(batch))
        applyGradients(self.params.blocks(), grads, cfg.learningRate)
        self.step += 1

        n = len(batch)
        return StepDiagnostics(
            step=self.step,
            meanSignal=float(rawSignals.mean()),
            elbo=elbo / n,
            thetaLoss=thetaLoss / n,
            psiLoss=psiLoss / n,
            baselineLoss=baselineLoss / n,
        )

    def checkpoint(self) -> Checkpoint:
        return Checkpoint(
            params=self.params,
            numEntities=self.context.graph.numEntities,
            baseline=self.baseline,
            signalState=self.signalState,
            step=self.step,
        )

    def run(
        self,
        trainItems: List[QAItem],
        rng: np.random.Generator,
        probeItems: Optional[List[QAItem]] = None,
        outDir: Optional[Path] = None
    ) -> TrainResult:
        """
        Train for the configured epochs (or totalSteps when positive).

        Args:
            trainItems: Training questions; topic labels are ignored
            rng: "sampling" stream (order, answer draws, posterior draws)
            probeItems: Labeled questions for the entity-accuracy column
            outDir: Where trainlog.csv and periodic checkpoints go

        Returns:
            TrainResult with the per-step history
        """
        if not trainItems:
            raise ValueError("no training questions")
        cfg = self.trainConfig
        stepsPerEpoch = math.ceil(len(trainItems) / cfg.batchSize)
        totalSteps = cfg.totalSteps if cfg.totalSteps > 0 else cfg.epochs * stepsPerEpoch
        epochs = math.ceil(totalSteps / stepsPerEpoch)
        probe = [p for p in (probeItems or []) if p.isLabeled][:cfg.probeSize]
        history: List[Dict[str, float]] = []
        logger.info(f"Joint training: {len(trainItems)} questions, {totalSteps} steps, M={cfg.samples}, workers={self.workers}")

        done = 0
        for epoch in range(1, epochs + 1):
            epochRows = []
            for batch in self.batches(trainItems, cfg.batchSize, rng):
                if done >= totalSteps:
                    break
                instances = [
                    (self.encode(item), int(item.answers[int(rng.integers(len(item.answers)))]))
                    for item in batch
                ]
                diagnostics = self.reinforceStep(instances, rng)
                done += 1
                row = {
                    "step": diagnostics.step,
                    "epoch": epoch,
                    "totalLoss": diagnostics.totalLoss,
                    "thetaLoss": diagnostics.thetaLoss,
                    "psiLoss": diagnostics.psiLoss,
                    "baselineLoss": diagnostics.baselineLoss,
                    "meanSignal": diagnostics.meanSignal,
                    "elbo": diagnostics.elbo,
                    "entityAccuracy": entityAccuracy(self.params.recognition, probe, self.context) if probe else None,
                }
                history.append(row)
                epochRows.append(row)
                logger.debug(
                    f"step {diagnostics.step}: loss {diagnostics.totalLoss:.4f}, "
                    f"A {diagnostics.meanSignal:.4f}, elbo {diagnostics.elbo:.4f}"
                )
                if outDir is not None and cfg.checkpointEvery > 0 and diagnostics.step % cfg.checkpointEvery == 0:
                    saveCheckpoint(Path(outDir) / f"checkpoint_step{diagnostics.step}.bin", self.checkpoint())

            if epochRows:
                meanLoss = float(np.mean([r["totalLoss"] for r in epochRows]))
                meanElbo = float(np.mean([r["elbo"] for r in epochRows]))
                accuracy = epochRows[-1]["entityAccuracy"]
                accuracyText = f", probe entity accuracy {accuracy:.3f}" if accuracy is not None else ""
                logger.info(f"Epoch {epoch}/{epochs}: mean loss {meanLoss:.4f}, mean ELBO {meanElbo:.4f}{accuracyText}")

        if outDir is not None:
            writeCsv(Path(outDir) / "trainlog.csv", TRAINLOG_FIELDS, history)
        return TrainResult(self.params, self.baseline, self.signalState, self.step, history)
