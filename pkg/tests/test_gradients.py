import numpy as np
import pytest

from evaluation.oracleChecks import checkGradients, finiteDifference
from model.baselineNet import BaselineNet
from model.gradients import GradientError, GradientSet, LossSpec, applyGradients, gradients, topicGradient
from model.kernels import answerDistribution, posteriorDistribution, topicDistribution


def _maxError(analytic, numeric):
    return max(float(np.max(np.abs(analytic[k] - numeric[k]))) for k in numeric)


class TestAnalyticGradients:

    def test_topic_matches_finite_differences(self, toyParams, toyContext):
        q = toyContext.vocab.encode(["who", "does", "ann", "know"])
        analytic = gradients(LossSpec("topic", q, y=0), toyParams, toyContext)
        numeric = finiteDifference(
            toyParams.blocks(), lambda: topicDistribution(toyParams.recognition, q, toyContext).logProbOf(0)
        )
        assert _maxError(analytic, numeric) < 1e-8

    def test_answer_matches_finite_differences(self, toyParams, toyContext):
        q = toyContext.vocab.encode(["what", "does", "ann", "like"])
        analytic = gradients(LossSpec("answer", q, y=0, a=2), toyParams, toyContext)
        numeric = finiteDifference(
            toyParams.blocks(),
            lambda: answerDistribution(toyParams.reasoning, q, toyContext.scopes.get(0)).logProbOf(2),
        )
        assert _maxError(analytic, numeric) < 1e-8

    def test_posterior_matches_finite_differences(self, toyParams, toyContext):
        q = toyContext.vocab.encode(["who", "does", "know", "bob"])
        analytic = gradients(LossSpec("posterior", q, y=3, a=1), toyParams, toyContext)
        numeric = finiteDifference(
            toyParams.blocks(), lambda: posteriorDistribution(toyParams.posterior, q, 1, toyContext).logProbOf(3)
        )
        assert _maxError(analytic, numeric) < 1e-8

    def test_untouched_blocks_are_zero(self, toyParams, toyContext):
        q = toyContext.vocab.encode(["who"])
        grads = gradients(LossSpec("topic", q, y=1), toyParams, toyContext)
        assert not np.any(grads["theta2.v"])
        assert not np.any(grads["psi.entTokens"])

    def test_weighted_targets_sum(self, toyParams, toyContext):
        q = toyContext.vocab.encode(["who", "like"])
        both = GradientSet(toyParams.blocks())
        topicGradient(toyParams.recognition, q, np.array([0.5, 0.0, 0.25, 0.0, 0.0]), toyContext, both)
        expected = GradientSet(toyParams.blocks())
        expected.add(gradients(LossSpec("topic", q, y=0), toyParams, toyContext), 0.5)
        expected.add(gradients(LossSpec("topic", q, y=2), toyParams, toyContext), 0.25)
        np.testing.assert_allclose(both.flat(), expected.flat(), atol=1e-12)

    def test_unknown_kind(self, toyParams, toyContext):
        with pytest.raises(ValueError, match="unknown loss kind"):
            gradients(LossSpec("entropy", np.array([1])), toyParams, toyContext)

    def test_oracle_suite(self):
        result = checkGradients(seed=0)
        assert result.passed, result.detail


class TestGradientSet:

    def test_check_names_bad_block(self):
        grads = GradientSet({"theta2.v": np.zeros((2, 2)), "theta1.entTokens": np.zeros(3)})
        grads["theta2.v"][0, 1] = np.nan
        with pytest.raises(GradientError, match="theta2.v: 1 non-finite"):
            grads.check("q=who a=bob")

    def test_ascent_step_raises_log_probability(self, toyParams, toyContext):
        q = toyContext.vocab.encode(["who", "does", "dan", "know"])
        before = topicDistribution(toyParams.recognition, q, toyContext).logProbOf(3)
        grads = gradients(LossSpec("topic", q, y=3), toyParams, toyContext)
        applyGradients(toyParams.blocks(), grads, 0.05)
        assert topicDistribution(toyParams.recognition, q, toyContext).logProbOf(3) > before


class TestBaselineNet:

    def test_untrained_predicts_zero(self):
        net = BaselineNet(5, 7, hidden=4, rng=np.random.default_rng(0))
        assert net.predict(np.array([1, 2]), 3) == 0.0

    def test_step_reduces_square_loss(self):
        net = BaselineNet(5, 7, hidden=4, rng=np.random.default_rng(0))
        q = np.array([1, 2, 2])
        losses = []
        for _ in range(20):
            losses.append((net.predict(q, 3) - 1.5) ** 2)
            net.step(q, 3, 1.5, 0.05)
        assert losses[-1] < losses[0]

    def test_step_returns_prediction_before_update(self):
        net = BaselineNet(5, 7, hidden=4, rng=np.random.default_rng(0))
        net.b2[0] = 0.3
        assert net.step(np.array([1]), 0, 2.0, 0.1) == pytest.approx(0.3)
        assert net.predict(np.array([1]), 0) != pytest.approx(0.3)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        net = BaselineNet(4, 6, hidden=3, rng=rng, initScale=0.5)
        for block in net.blocks().values():
            block[...] = rng.uniform(-0.5, 0.5, size=block.shape)
        q = np.array([1, 5, 5])
        _, _, analytic = net.gradients(q, 2, 0.7)
        numeric = finiteDifference(net.blocks(), lambda: (net.predict(q, 2) - 0.7) ** 2)
        assert _maxError(analytic, numeric) < 1e-8

    def test_from_blocks_checks_width(self):
        net = BaselineNet(4, 6, hidden=3)
        with pytest.raises(ValueError, match="input width"):
            BaselineNet.fromBlocks(5, 6, net.blocks())
