from dataclasses import replace

import numpy as np
import pytest

from agents.pretrainAgent import PretrainAgent
from agents.reinforceAgent import TRAINLOG_FIELDS, ReinforceAgent
from config.settings import TrainConfig
from datagen.qaItem import QAItem
from evaluation.oracleChecks import checkReinforceUnbiased, checkScoreIdentity
from model.baselineNet import BaselineNet
from model.kernels import topicDistribution
from model.signalState import LearningSignalState, normalizeSignal
from utils.csvWriter import readCsv


def _toyItems():
    return [
        QAItem(tokens=["who", "does", "ann", "know"], answers=(1,), hops=1, topicEntity=0, sourceEntity=0),
        QAItem(tokens=["what", "does", "bob", "like"], answers=(2,), hops=1, topicEntity=1, sourceEntity=1),
        QAItem(tokens=["who", "does", "dan", "know"], answers=(1,), hops=1, topicEntity=3, sourceEntity=3),
        QAItem(tokens=["who", "does", "know", "bob"], answers=(0, 3), hops=1),
    ]


def _baseline(context, seed=1):
    return BaselineNet(context.graph.numEntities, len(context.vocab), hidden=4, rng=np.random.default_rng(seed))


class TestNormalizeSignal:

    def test_moving_average_update(self):
        normalized, state = normalizeSignal(LearningSignalState(), [1.0, 3.0])
        assert state.muTilde == pytest.approx(0.2)
        assert state.sigmaTilde == pytest.approx(1.0)
        np.testing.assert_allclose(normalized, [0.8, 2.8])

    def test_zero_decay_uses_batch_statistics(self):
        state = LearningSignalState(muTilde=7.0, sigmaTilde=3.0, decay=0.0)
        normalized, updated = normalizeSignal(state, [1.0, 3.0])
        assert updated.muTilde == 2.0
        assert updated.sigmaTilde == 1.0
        np.testing.assert_array_equal(normalized, [-1.0, 1.0])

    def test_two_step_recurrence(self):
        _, state = normalizeSignal(LearningSignalState(decay=0.9), [1.0, 3.0])
        normalized, state = normalizeSignal(state, [4.0, 0.0, 2.0])
        mu = 0.9 * 0.2 + 0.1 * 2.0
        sigma = 0.9 * 1.0 + 0.1 * np.sqrt(8.0 / 3.0)
        assert state.muTilde == pytest.approx(mu)
        assert state.sigmaTilde == pytest.approx(sigma)
        np.testing.assert_allclose(normalized, (np.array([4.0, 0.0, 2.0]) - mu) / sigma)

    def test_sigma_floor(self):
        state = LearningSignalState(muTilde=5.0, sigmaTilde=1e-6, decay=0.5, floor=1e-4)
        _, updated = normalizeSignal(state, [5.0, 5.0])
        assert updated.sigmaTilde == 1e-4

    def test_empty_batch(self):
        with pytest.raises(ValueError):
            normalizeSignal(LearningSignalState(), [])


class TestPretrainAgent:

    def test_requires_labels(self, toyContext, toyParams):
        agent = PretrainAgent(toyContext, toyParams, TrainConfig())
        with pytest.raises(ValueError, match="at least one"):
            agent.run([], np.random.default_rng(0))
        with pytest.raises(ValueError, match="unlabeled"):
            agent.run(_toyItems(), np.random.default_rng(0))

    def test_raises_topic_log_probability(self, toyContext, toyParams):
        labeled = [item for item in _toyItems() if item.isLabeled]
        q = toyContext.vocab.encode(labeled[2].tokens)
        before = topicDistribution(toyParams.recognition, q, toyContext).logProbOf(3)
        PretrainAgent(toyContext, toyParams, TrainConfig(pretrainEpochs=20, batchSize=2)).run(labeled, np.random.default_rng(0))
        assert topicDistribution(toyParams.recognition, q, toyContext).logProbOf(3) > before

    def test_same_seed_same_parameters(self, toyContext, toyParams):
        labeled = [item for item in _toyItems() if item.isLabeled]
        results = []
        for _ in range(2):
            params = toyParams.copy()
            PretrainAgent(toyContext, params, TrainConfig(pretrainEpochs=3, batchSize=2)).run(labeled, np.random.default_rng(5))
            results.append(params.blocks())
        for name in results[0]:
            np.testing.assert_array_equal(results[0][name], results[1][name])
        assert any(np.any(results[0][name] != toyParams.blocks()[name]) for name in results[0])


class TestReinforceAgent:

    def _instances(self, context):
        return [(context.vocab.encode(item.tokens), item.answers[0]) for item in _toyItems()]

    def test_step_is_deterministic(self, toyContext, toyParams):
        results = []
        for _ in range(2):
            agent = ReinforceAgent(toyContext, toyParams.copy(), _baseline(toyContext), TrainConfig(samples=4))
            agent.reinforceStep(self._instances(toyContext), np.random.default_rng(7))
            results.append(agent.params.blocks())
        for name in results[0]:
            np.testing.assert_array_equal(results[0][name], results[1][name])

    def test_workers_do_not_change_the_update(self, toyContext, toyParams):
        results = []
        for workers in (1, 3):
            agent = ReinforceAgent(
                toyContext, toyParams.copy(), _baseline(toyContext), TrainConfig(samples=4), workers=workers
            )
            agent.reinforceStep(self._instances(toyContext), np.random.default_rng(7))
            results.append((agent.params.blocks(), agent.signalState))
        assert results[0][1] == results[1][1]
        for name in results[0][0]:
            np.testing.assert_array_equal(results[0][0][name], results[1][0][name])

    def test_without_variance_reduction(self, toyContext, toyParams):
        baseline = _baseline(toyContext)
        before = {k: v.copy() for k, v in baseline.blocks().items()}
        agent = ReinforceAgent(toyContext, toyParams, baseline, TrainConfig(samples=3, varianceReduction=False))
        diagnostics = agent.reinforceStep(self._instances(toyContext), np.random.default_rng(0))
        assert agent.signalState == LearningSignalState(decay=0.9, floor=1e-4)
        assert diagnostics.baselineLoss == 0.0
        for name, block in baseline.blocks().items():
            np.testing.assert_array_equal(block, before[name])

    def test_zero_learning_rate_keeps_parameters(self, toyContext, toyParams):
        before = {k: v.copy() for k, v in toyParams.blocks().items()}
        agent = ReinforceAgent(toyContext, toyParams, _baseline(toyContext), TrainConfig(samples=4, learningRate=0.0))
        diagnostics = agent.reinforceStep(self._instances(toyContext), np.random.default_rng(1))
        assert diagnostics.step == 1
        for name, block in toyParams.blocks().items():
            np.testing.assert_array_equal(block, before[name])

    def test_step_updates_every_group(self, toyContext, toyParams):
        before = {k: v.copy() for k, v in toyParams.blocks().items()}
        agent = ReinforceAgent(toyContext, toyParams, _baseline(toyContext), TrainConfig(samples=4))
        diagnostics = agent.reinforceStep(self._instances(toyContext), np.random.default_rng(1))
        assert diagnostics.step == 1
        for name in ("theta1.entTokens", "theta2.qtTokens", "psi.entTokens"):
            assert np.any(toyParams.blocks()[name] != before[name]), name
        assert np.isfinite(diagnostics.elbo)

    def test_run_writes_trainlog_and_checkpoints(self, tmp_path, toyContext, toyParams):
        cfg = TrainConfig(samples=2, batchSize=2, totalSteps=4, checkpointEvery=2)
        agent = ReinforceAgent(toyContext, toyParams, _baseline(toyContext), cfg)
        items = _toyItems()
        result = agent.run(items, np.random.default_rng(0), probeItems=items, outDir=tmp_path)
        assert result.steps == 4
        rows = readCsv(tmp_path / "trainlog.csv")
        assert list(rows[0]) == TRAINLOG_FIELDS
        assert [int(r["step"]) for r in rows] == [1, 2, 3, 4]
        assert all(r["entityAccuracy"] != "" for r in rows)
        assert (tmp_path / "checkpoint_step2.bin").is_file()
        assert (tmp_path / "checkpoint_step4.bin").is_file()

    def test_epochs_when_total_steps_unset(self, toyContext, toyParams):
        agent = ReinforceAgent(toyContext, toyParams, _baseline(toyContext), TrainConfig(samples=2, batchSize=3, epochs=2))
        result = agent.run(_toyItems(), np.random.default_rng(0))
        assert result.steps == 4

    def test_run_needs_items(self, toyContext, toyParams):
        agent = ReinforceAgent(toyContext, toyParams, _baseline(toyContext), TrainConfig())
        with pytest.raises(ValueError):
            agent.run([], np.random.default_rng(0))

    def test_checkpoint_carries_state(self, toyContext, toyParams):
        state = replace(LearningSignalState(), muTilde=0.5)
        agent = ReinforceAgent(toyContext, toyParams, _baseline(toyContext), TrainConfig(), signalState=state, step=9)
        checkpoint = agent.checkpoint()
        assert checkpoint.step == 9
        assert checkpoint.signalState.muTilde == 0.5
        assert checkpoint.numEntities == toyContext.graph.numEntities


class TestEstimatorOracles:

    def test_score_identity(self):
        result = checkScoreIdentity(seed=0, instances=5)
        assert result.passed, result.detail

    def test_reinforce_unbiased(self):
        result = checkReinforceUnbiased(seed=0, samples=20_000)
        assert result.passed, result.detail
