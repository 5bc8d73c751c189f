import numpy as np
import pytest
from scipy.special import logsumexp

from config.settings import ModelConfig
from knowledge.kgStore import KnowledgeGraph, Triple
from knowledge.vocabulary import buildVocab
from model.context import ModelContext
from model.kernels import (
    Distribution,
    answerDistribution,
    embedQuestion,
    entityWeight,
    forwardPropagate,
    posteriorDistribution,
    topicDistribution,
)
from model.objectives import elbo, elboFromPosterior, exactPosterior, learningSignal, marginalLoglik
from model.params import FREE, ReasoningParams, ShapeError, VrnParams, initParams


def _question(context, *words):
    return context.vocab.encode(words)


class TestParams:

    def test_blocks_and_shapes(self, toyParams, toyContext):
        blocks = toyParams.blocks()
        assert set(blocks) == {
            "theta1.entTokens", "theta1.nameTokens", "theta2.qtTokens", "theta2.v",
            "psi.entTokens", "psi.nameTokens", "psi.qtTokens", "psi.v",
        }
        assert blocks["theta2.v"].shape == (4, 4 + 2)
        assert blocks["theta1.entTokens"].shape == (len(toyContext.vocab), 4)

    def test_init_range(self, toyParams):
        for block in toyParams.blocks().values():
            assert np.all(np.abs(block) <= 0.5)

    def test_directional_relations_widen_v(self, toyGraph, toyContext):
        settings = ModelConfig(dim=3, directionalRelations=True)
        params = initParams(settings, toyGraph, toyContext.vocab, np.random.default_rng(0))
        assert params.reasoning.v.shape == (3, 3 + 4)

    def test_shared_posterior_aliases(self, toyGraph, toyContext):
        settings = ModelConfig(dim=3, sharePosterior=True, recognitionMode=FREE)
        params = initParams(settings, toyGraph, toyContext.vocab, np.random.default_rng(0))
        assert params.posterior.recognition is params.recognition
        assert params.posterior.reasoning is params.reasoning
        assert not any(k.startswith("psi.") for k in params.blocks())
        assert params.blocks()["theta1.freeW"].shape == (toyGraph.numEntities, 3)

    def test_copy_is_deep(self, toyParams):
        clone = toyParams.copy()
        clone.reasoning.v[0, 0] += 1.0
        assert clone.reasoning.v[0, 0] != toyParams.reasoning.v[0, 0]

    def test_shape_error(self):
        params = ReasoningParams(prefix="theta2", qtTokens=np.zeros((3, 2)), v=np.zeros((2, 3)), numRelations=2)
        with pytest.raises(ShapeError):
            params.checkShapes()

    def test_from_blocks_reuses_arrays(self, toyParams):
        rebuilt = VrnParams.fromBlocks(toyParams.settings, toyParams.numRelations, toyParams.blocks())
        assert rebuilt.reasoning.v is toyParams.reasoning.v


class TestDistribution:

    def test_ranked_ties_to_lower_id(self):
        dist = Distribution(np.array([3, 1, 2]), np.log([0.25, 0.5, 0.25]))
        assert dist.ranked().tolist() == [1, 2, 0]
        assert dist.argmax() == 1

    def test_log_prob_outside_support(self):
        dist = Distribution(np.array([0, 2]), np.log([0.5, 0.5]))
        assert dist.logProbOf(1) == -np.inf

    def test_sample_stays_in_support(self):
        dist = Distribution(np.array([4, 9]), np.log([0.3, 0.7]))
        draws = dist.sample(np.random.default_rng(0), 500)
        assert set(draws.tolist()) <= {4, 9}


class TestKernels:

    def test_embed_question_mean(self):
        table = np.arange(6, dtype=float).reshape(3, 2)
        np.testing.assert_allclose(embedQuestion(table, np.array([1, 2, 2])), [(2 + 4 + 4) / 3, (3 + 5 + 5) / 3])

    def test_empty_question(self):
        with pytest.raises(ValueError):
            embedQuestion(np.zeros((2, 2)), np.array([], dtype=np.int64))

    def test_topic_distribution_normalized(self, toyParams, toyContext):
        dist = topicDistribution(toyParams.recognition, _question(toyContext, "who", "does", "ann", "know"), toyContext)
        assert dist.support.tolist() == list(range(5))
        assert logsumexp(dist.logProbs) == pytest.approx(0.0, abs=1e-12)

    def test_name_bow_weight_is_mean_of_name_tokens(self):
        graph = KnowledgeGraph(["big cat", "cat"], ["r"], [Triple(0, 0, 1)])
        vocab = buildVocab(graph.entityTokens)
        context = ModelContext.build(graph, vocab, 1)
        params = initParams(ModelConfig(dim=3), graph, vocab, np.random.default_rng(1))
        rows = params.recognition.nameTokens
        np.testing.assert_allclose(entityWeight(params.recognition, 0, context), (rows[1] + rows[2]) / 2)
        np.testing.assert_allclose(entityWeight(params.recognition, 1, context), rows[2])

    def test_identical_name_tokens_give_identical_logits(self):
        graph = KnowledgeGraph(["Heat", "heat!", "drama"], ["r"], [Triple(0, 0, 2), Triple(1, 0, 2)])
        vocab = buildVocab(graph.entityTokens + [["who", "saw"]])
        context = ModelContext.build(graph, vocab, 1)
        params = initParams(ModelConfig(dim=4), graph, vocab, np.random.default_rng(3))
        np.testing.assert_array_equal(entityWeight(params.recognition, 0, context), entityWeight(params.recognition, 1, context))
        for words in (("who", "saw", "heat"), ("drama",), ("saw",)):
            logProbs = topicDistribution(params.recognition, _question(context, *words), context).logProbs
            assert logProbs[0] == logProbs[1]

    def test_empty_entity_name_rejected(self):
        graph = KnowledgeGraph(["!!!", "b"], ["r"], [Triple(0, 0, 1)])
        vocab = buildVocab(graph.entityTokens + [["q"]])
        context = ModelContext.build(graph, vocab, 1)
        params = initParams(ModelConfig(dim=2), graph, vocab, np.random.default_rng(0))
        with pytest.raises(ValueError, match="empty name"):
            entityWeight(params.recognition, 0, context)

    def test_forward_propagation_by_hand(self, toyParams, toyContext):
        reasoning = toyParams.reasoning
        scope = toyContext.scopes.get(0)
        g = forwardPropagate(reasoning, scope)
        bob = np.maximum(reasoning.vRel[:, 0], 0.0)
        cat = np.maximum(reasoning.vNode @ bob + reasoning.vRel[:, 1], 0.0)
        dan = np.maximum(reasoning.vNode @ bob + reasoning.vRel[:, 0], 0.0)
        np.testing.assert_array_equal(g.values[0], 0.0)
        np.testing.assert_allclose(g.values[1], bob, atol=1e-12)
        np.testing.assert_allclose(g.values[2], cat, atol=1e-12)
        np.testing.assert_allclose(g.values[3], dan, atol=1e-12)
        assert g.visits == len(scope) + scope.numParentEdges

    def test_parent_mean(self):
        # c has two parents at hop 1: a -r0-> c and b -r1-> c, with source s linked to both.
        graph = KnowledgeGraph(
            ["s", "a", "b", "c"], ["r0", "r1"],
            [Triple(0, 0, 1), Triple(0, 0, 2), Triple(1, 0, 3), Triple(2, 1, 3)],
        )
        vocab = buildVocab(graph.entityTokens)
        params = initParams(ModelConfig(dim=3, initScale=0.5), graph, vocab, np.random.default_rng(2))
        reasoning = params.reasoning
        values = forwardPropagate(reasoning, ModelContext.build(graph, vocab, 2).scopes.get(0)).values
        first = np.maximum(reasoning.vRel[:, 0], 0.0)
        expected = (np.maximum(reasoning.vNode @ first + reasoning.vRel[:, 0], 0.0)
                    + np.maximum(reasoning.vNode @ first + reasoning.vRel[:, 1], 0.0)) / 2
        np.testing.assert_allclose(values[3], expected, atol=1e-12)

    def test_answer_distribution_over_scope(self, toyParams, toyContext):
        q = _question(toyContext, "who", "does", "ann", "like")
        dist = answerDistribution(toyParams.reasoning, q, toyContext.scopes.get(0))
        assert dist.support.tolist() == [0, 1, 2, 3]
        assert np.exp(dist.logProbs).sum() == pytest.approx(1.0)

    def test_one_entity_graph(self):
        graph = KnowledgeGraph(["solo"], ["r"], [])
        vocab = buildVocab(graph.entityTokens)
        context = ModelContext.build(graph, vocab, 1)
        params = initParams(ModelConfig(dim=2), graph, vocab, np.random.default_rng(0))
        dist = answerDistribution(params.reasoning, np.array([1]), context.scopes.get(0))
        assert dist.logProbOf(0) == 0.0

    def test_posterior_contains_answer(self, toyParams, toyContext):
        dist = posteriorDistribution(toyParams.posterior, _question(toyContext, "who", "knows"), 2, toyContext)
        assert 2 in dist.support.tolist()
        assert set(dist.support.tolist()) == {0, 1, 2, 3}


class TestObjectives:

    def test_elbo_below_marginal(self, toyParams, toyContext):
        q = _question(toyContext, "who", "does", "ann", "like")
        for a in range(4):
            assert elbo(toyParams, toyContext, q, a) <= marginalLoglik(toyParams, toyContext, q, a) + 1e-9

    def test_exact_posterior_is_tight(self, toyParams, toyContext):
        q = _question(toyContext, "what", "does", "dan", "know")
        posterior = exactPosterior(toyParams, toyContext, q, 2)
        assert np.exp(posterior.logProbs).sum() == pytest.approx(1.0)
        assert elboFromPosterior(toyParams, toyContext, q, 2, posterior) == pytest.approx(
            marginalLoglik(toyParams, toyContext, q, 2), abs=1e-9
        )

    def test_learning_signal_decomposes(self, toyParams, toyContext):
        q = _question(toyContext, "who", "likes", "cat")
        a, y = 2, 1
        expected = (
            topicDistribution(toyParams.recognition, q, toyContext).logProbOf(y)
            + answerDistribution(toyParams.reasoning, q, toyContext.scopes.get(y)).logProbOf(a)
            - posteriorDistribution(toyParams.posterior, q, a, toyContext).logProbOf(y)
        )
        assert learningSignal(toyParams, toyContext, q, a, y) == pytest.approx(expected)

    def test_elbo_is_expected_signal(self, toyParams, toyContext):
        q = _question(toyContext, "who", "likes", "cat")
        posterior = posteriorDistribution(toyParams.posterior, q, 2, toyContext)
        signals = [learningSignal(toyParams, toyContext, q, 2, int(y)) for y in posterior.support]
        assert elbo(toyParams, toyContext, q, 2) == pytest.approx(float(posterior.probs @ signals))
