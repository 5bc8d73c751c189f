import numpy as np
import pytest

from agents.inferenceAgent import InferenceAgent
from config.settings import InferenceConfig, ModelConfig
from datagen.qaItem import QAItem
from knowledge.kgStore import Direction, KnowledgeGraph
from knowledge.scope import ScopeError
from knowledge.vocabulary import buildVocab
from model.context import ModelContext
from model.kernels import answerDistribution, topicDistribution
from model.params import initParams


def _q(context, *words):
    return context.vocab.encode(words)


class TestAnswer:

    def test_greedy_is_top_topic_then_best_answer(self, toyContext, toyParams):
        agent = InferenceAgent(toyContext, toyParams, InferenceConfig(beam=1, hops=2))
        q = _q(toyContext, "who", "does", "ann", "know")
        result = agent.answer(q)
        top = topicDistribution(toyParams.recognition, q, toyContext).argmax()
        dist = answerDistribution(toyParams.reasoning, q, toyContext.scopes.get(top))
        assert (result.topic, result.answer) == (top, dist.argmax())
        assert result.score == pytest.approx(dist.logProbOf(dist.argmax()))
        assert len(result.candidates) == 1

    def test_full_beam_matches_brute_force(self, toyContext, toyParams):
        agent = InferenceAgent(toyContext, toyParams, InferenceConfig(beam=5, hops=2))
        q = _q(toyContext, "what", "does", "bob", "like")
        best = max(
            answerDistribution(toyParams.reasoning, q, toyContext.scopes.get(y)).logProbs.max() for y in range(5)
        )
        result = agent.answer(q)
        assert result.score == pytest.approx(best)
        assert len(result.candidates) == 5

    def test_wider_beam_never_scores_lower(self, toyContext, toyParams):
        rng = np.random.default_rng(0)
        narrow = InferenceAgent(toyContext, toyParams, InferenceConfig(beam=1, hops=2))
        wide = InferenceAgent(toyContext, toyParams, InferenceConfig(beam=3, hops=2))
        for _ in range(50):
            q = rng.integers(1, len(toyContext.vocab), size=3)
            assert wide.answer(q).score >= narrow.answer(q).score - 1e-12

    def test_answer_is_in_chosen_scope(self, toyContext, toyParams):
        agent = InferenceAgent(toyContext, toyParams, InferenceConfig(beam=5, hops=1))
        result = agent.answer(_q(toyContext, "who", "likes", "cat"))
        assert agent.context.scopes.get(result.topic).contains(result.answer)

    def test_topic_labels_restrict_beam(self, toyContext, toyParams):
        agent = InferenceAgent(toyContext, toyParams, InferenceConfig(beam=5, hops=2, useTopicLabels=True))
        result = agent.answer(_q(toyContext, "who", "does", "dan", "know"), topicLabel=3)
        assert result.topic == 3
        assert [row.topic for row in result.candidates] == [3]

    def test_joint_score(self, toyContext, toyParams):
        agent = InferenceAgent(toyContext, toyParams, InferenceConfig(beam=5, hops=2, jointScore=True))
        result = agent.answer(_q(toyContext, "who", "does", "ann", "know"))
        row = next(r for r in result.candidates if r.topic == result.topic)
        assert result.score == pytest.approx(row.logP1 + row.logP2)
        assert result.score == pytest.approx(max(r.logP1 + r.logP2 for r in result.candidates))

    def test_one_entity_graph(self):
        graph = KnowledgeGraph(["solo"], ["r"], [])
        vocab = buildVocab(graph.entityTokens + [["who"]])
        params = initParams(ModelConfig(dim=2), graph, vocab, np.random.default_rng(0))
        agent = InferenceAgent(ModelContext.build(graph, vocab, 1), params, InferenceConfig())
        result = agent.answer(vocab.encode(["who"]))
        assert (result.answer, result.score) == (0, 0.0)

    def test_run(self, toyContext, toyParams):
        items = [
            QAItem(tokens=["who", "does", "ann", "know"], answers=(1,), hops=1),
            QAItem(tokens=["what", "does", "bob", "like"], answers=(2,), hops=1, topicEntity=1),
        ]
        results = InferenceAgent(toyContext, toyParams, InferenceConfig(hops=1)).run(items)
        assert len(results) == 2


class TestInspectPath:

    def test_two_hop_chain(self, toyContext, toyParams):
        agent = InferenceAgent(toyContext, toyParams, InferenceConfig(hops=2))
        path = agent.inspectPath(_q(toyContext, "what", "does", "ann", "like"), 0, 2)
        assert len(path) == 2
        assert path.edges[0].source == 0 and path.edges[-1].target == 2
        assert path.edges[0].target == path.edges[1].source
        assert path.format(toyContext.graph) == "ann -[knows,fwd]-> bob -[likes,fwd]-> cat"

    def test_backward_edge(self, toyContext, toyParams):
        agent = InferenceAgent(toyContext, toyParams, InferenceConfig(hops=2))
        path = agent.inspectPath(_q(toyContext, "who"), 0, 3)
        assert path.edges[-1].direction is Direction.BACKWARD
        assert path.format(toyContext.graph) == "ann -[knows,fwd]-> bob -[knows,bwd]-> dan"

    def test_source_is_empty_path(self, toyContext, toyParams):
        agent = InferenceAgent(toyContext, toyParams, InferenceConfig(hops=2))
        path = agent.inspectPath(_q(toyContext, "who"), 1, 1)
        assert len(path) == 0
        assert path.format(toyContext.graph) == "bob"

    def test_answer_outside_scope(self, toyContext, toyParams):
        agent = InferenceAgent(toyContext, toyParams, InferenceConfig(hops=2))
        with pytest.raises(ScopeError):
            agent.inspectPath(_q(toyContext, "who"), 0, 4)

    def test_paths_chain_and_exist(self, smallKg):
        vocab = buildVocab(smallKg.entityTokens + [["which", "movies"]])
        context = ModelContext.build(smallKg, vocab, 2)
        params = initParams(ModelConfig(dim=6, initScale=0.3), smallKg, vocab, np.random.default_rng(3))
        agent = InferenceAgent(context, params, InferenceConfig(hops=2))
        triples = {(t.subject, t.relation, t.object) for t in smallKg.triples}
        rng = np.random.default_rng(5)
        for _ in range(100):
            y = int(rng.integers(smallKg.numEntities))
            scope = context.scopes.get(y)
            a = int(scope.entities[int(rng.integers(len(scope)))])
            path = agent.inspectPath(vocab.encode(["which", "movies"]), y, a)
            assert len(path) == scope.nodes[scope.position(a)].hop <= 2
            position = y
            for edge in path.edges:
                assert edge.source == position
                if edge.direction is Direction.FORWARD:
                    assert (edge.source, edge.relation, edge.target) in triples
                else:
                    assert (edge.target, edge.relation, edge.source) in triples
                position = edge.target
            assert position == a
