import numpy as np
import pytest

from agents.supervisedEmbeddingAgent import SupervisedEmbeddingAgent
from config.settings import EvalConfig, ModelConfig
from datagen.qaItem import DatasetSplit, QAItem
from evaluation import (
    METRICS_FIELDS,
    Metrics,
    appendMetrics,
    datasetRegime,
    datasetReport,
    entityAccuracy,
    hitsAt1,
    metricsRows,
    newEntityRatio,
    newPairRatio,
)
from model.kernels import topicDistribution
from utils.csvWriter import readCsv


def _item(answers, hops=1, topic=None, source=None, tokens=("who", "does", "ann", "know")):
    return QAItem(tokens=list(tokens), answers=tuple(answers), hops=hops, topicEntity=topic, sourceEntity=source)


class TestHitsAt1:

    def test_all_hits(self):
        items = [_item((1,)), _item((2, 3))]
        assert hitsAt1(lambda item: item.answers[0], items).hitsAt1 == 1.0

    def test_no_hits(self):
        assert hitsAt1(lambda item: 0, [_item((1,)), _item((2,))]).hitsAt1 == 0.0

    def test_mixed_and_per_hop(self):
        items = [_item((1,)), _item((1,)), _item((1,), hops=2), _item((5,), hops=2)]
        metrics = hitsAt1(lambda item: 1, items)
        assert metrics.hitsAt1 == 0.75
        assert metrics.count == 4
        assert metrics.perHop == {1: 1.0, 2: 0.5}

    def test_any_gold_answer_counts(self):
        assert hitsAt1(lambda item: 3, [_item((1, 3, 4))]).hitsAt1 == 1.0

    def test_empty(self):
        with pytest.raises(ValueError, match="empty"):
            hitsAt1(lambda item: 0, [])


class TestEntityAccuracy:

    def test_matches_topic_argmax(self, toyParams, toyContext):
        items = [_item((1,), topic=0), _item((2,), topic=1, tokens=("what", "does", "bob", "like"))]
        expected = np.mean([
            topicDistribution(toyParams.recognition, toyContext.vocab.encode(i.tokens), toyContext).argmax()
            == i.topicEntity
            for i in items
        ])
        assert entityAccuracy(toyParams.recognition, items, toyContext) == pytest.approx(expected)

    def test_unlabeled_item(self, toyParams, toyContext):
        with pytest.raises(ValueError, match="unlabeled"):
            entityAccuracy(toyParams.recognition, [_item((1,))], toyContext)

    def test_empty(self, toyParams, toyContext):
        with pytest.raises(ValueError):
            entityAccuracy(toyParams.recognition, [], toyContext)


class TestMetricsRows:

    def test_range_checked(self):
        with pytest.raises(ValueError, match="outside"):
            Metrics(hitsAt1=1.5, count=1)
        with pytest.raises(ValueError):
            Metrics(hitsAt1=0.5, count=2, entityAccuracy=-0.1)

    def test_one_row_per_hop(self):
        metrics = Metrics(hitsAt1=0.5, count=4, entityAccuracy=0.25, perHop={1: 0.75, 3: 0.25})
        rows = metricsRows("synthetic", "vanilla", "vrn", metrics)
        assert [r["hop"] for r in rows] == [1, 3]
        assert rows[0] == {
            "dataset": "synthetic", "hop": 1, "regime": "vanilla",
            "hits_at_1": 0.75, "entity_accuracy": 0.25, "model": "vrn",
        }

    def test_append_writes_header_once(self, tmp_path):
        path = tmp_path / "metrics.csv"
        metrics = Metrics(hitsAt1=0.5, count=2, perHop={1: 0.5})
        appendMetrics(path, metricsRows("synthetic", "vanilla", "vrn", metrics))
        appendMetrics(path, metricsRows("synthetic", "vanilla", "supervised_embedding", metrics))
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(METRICS_FIELDS)
        assert len(lines) == 3
        rows = readCsv(path)
        assert rows[0]["hits_at_1"] == "0.500000"
        assert rows[0]["entity_accuracy"] == ""
        assert rows[1]["model"] == "supervised_embedding"


class TestDatasetReport:

    def test_ratios(self):
        train = [_item((5,), source=0), _item((6,), source=1)]
        held = [_item((5,), source=0), _item((7,), source=0), _item((5,), source=2)]
        assert newEntityRatio(train, held) == pytest.approx(1 / 3)
        assert newPairRatio(train, held) == pytest.approx(2 / 3)

    def test_topic_label_fallback(self):
        assert newEntityRatio([_item((1,), topic=4)], [_item((1,), topic=4)]) == 0.0

    def test_unknown_topics_ignored(self):
        assert newEntityRatio([_item((1,), source=0)], [_item((1,))]) == 0.0

    def test_rows(self):
        split = DatasetSplit(
            train=[_item((5,), source=0)],
            validation=[_item((5,), source=0)],
            test=[_item((5,), source=3)],
        )
        rows = datasetReport(2, split)
        assert [(r["split"], r["items"], r["new_entity_ratio"]) for r in rows] == [
            ("validation", 1, 0.0), ("test", 1, 1.0)
        ]
        assert all(r["hop"] == 2 for r in rows)

    def test_regime_follows_training_labels(self):
        assert datasetRegime([_item((1,), topic=0), _item((2,), topic=1)]) == "vanilla"
        assert datasetRegime([_item((1,), topic=0), _item((2,), source=1)]) == "eu"
        assert datasetRegime([]) == "eu"


class TestSupervisedEmbedding:

    def _items(self):
        return [
            _item((1,), tokens=("who", "does", "ann", "know")),
            _item((2,), tokens=("what", "does", "bob", "like")),
            _item((1,), tokens=("who", "does", "dan", "know")),
        ]

    def test_memorizes_training_set(self, toyContext):
        agent = SupervisedEmbeddingAgent(
            toyContext, ModelConfig(dim=8, initScale=0.1), EvalConfig(baselineEpochs=200, baselineLearningRate=0.5),
            np.random.default_rng(0),
        )
        agent.run(self._items(), np.random.default_rng(1))
        metrics = hitsAt1(lambda item: agent.predict(agent.encode(item)), self._items())
        assert metrics.hitsAt1 == 1.0

    def test_deterministic(self, toyContext):
        tables = []
        for _ in range(2):
            agent = SupervisedEmbeddingAgent(
                toyContext, ModelConfig(dim=4), EvalConfig(baselineEpochs=3), np.random.default_rng(0)
            )
            params = agent.run(self._items(), np.random.default_rng(1))
            tables.append(params.entityTable.copy())
        np.testing.assert_array_equal(tables[0], tables[1])
