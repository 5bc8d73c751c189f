import numpy as np
import pytest

from config.settings import ModelConfig
from evaluation.oracleChecks import smallKgConfig
from datagen.kgGenerator import generateKg
from knowledge.kgStore import KnowledgeGraph, Triple
from knowledge.vocabulary import buildVocab
from model.context import ModelContext
from model.params import initParams

QUESTION_WORDS = ["who", "does", "know", "like", "what"]


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skipSlow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skipSlow)


@pytest.fixture
def toyGraph() -> KnowledgeGraph:
    """ann -knows-> bob -likes-> cat, dan -knows-> bob, eve isolated."""
    return KnowledgeGraph(
        ["ann", "bob", "cat", "dan", "eve"],
        ["knows", "likes"],
        [Triple(0, 0, 1), Triple(1, 1, 2), Triple(3, 0, 1)],
    )


@pytest.fixture
def toyContext(toyGraph) -> ModelContext:
    vocab = buildVocab(toyGraph.entityTokens + [QUESTION_WORDS])
    return ModelContext.build(toyGraph, vocab, 2)


@pytest.fixture
def toyParams(toyContext):
    settings = ModelConfig(dim=4, initScale=0.5)
    return initParams(settings, toyContext.graph, toyContext.vocab, np.random.default_rng(0))


@pytest.fixture(scope="session")
def smallKg() -> KnowledgeGraph:
    return generateKg(smallKgConfig(0))
