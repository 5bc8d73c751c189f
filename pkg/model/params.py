import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
from scipy import sparse

from config.settings import ModelConfig
from knowledge.kgStore import Direction, KnowledgeGraph
from knowledge.vocabulary import Vocabulary

logger = logging.getLogger(__name__)

NAME_BOW = "name-bow"
FREE = "free"

# Embedding tables are plain float64 matrices: one row per token (or entity), d columns.
EmbeddingTable = np.ndarray


class ShapeError(ValueError):
    """Parameter shapes inconsistent with d, |R| or the vocabulary."""


@dataclass
class RecognitionParams:
    """Topic-entity recognizer: W_y from name tokens (or free rows) scored against f_ent(q)."""

    prefix: str
    mode: str
    entTokens: EmbeddingTable
    nameTokens: Optional[EmbeddingTable] = None
    freeW: Optional[EmbeddingTable] = None

    @property
    def entKey(self) -> str:
        return f"{self.prefix}.entTokens"

    @property
    def nameKey(self) -> str:
        return f"{self.prefix}.nameTokens"

    @property
    def freeKey(self) -> str:
        return f"{self.prefix}.freeW"

    def blocks(self) -> Dict[str, np.ndarray]:
        blocks = {self.entKey: self.entTokens}
        if self.mode == NAME_BOW:
            blocks[self.nameKey] = self.nameTokens
        else:
            blocks[self.freeKey] = self.freeW
        return blocks


@dataclass
class ReasoningParams:
    """Question-type embedding f_qt and the propagation matrix V = [V_node | V_rel]."""

    prefix: str
    qtTokens: EmbeddingTable
    v: np.ndarray
    numRelations: int
    directional: bool = False

    @property
    def qtKey(self) -> str:
        return f"{self.prefix}.qtTokens"

    @property
    def vKey(self) -> str:
        return f"{self.prefix}.v"

    @property
    def dim(self) -> int:
        return self.qtTokens.shape[1]

    @property
    def relationWidth(self) -> int:
        return self.numRelations * (2 if self.directional else 1)

    @property
    def vNode(self) -> np.ndarray:
        return self.v[:, :self.dim]

    @property
    def vRel(self) -> np.ndarray:
        return self.v[:, self.dim:]

    def relationColumns(self, relations: np.ndarray, directions: np.ndarray) -> np.ndarray:
        """Column of the relation one-hot; backward traversals get their own block when directional."""
        if not self.directional:
            return relations
        return relations + self.numRelations * (directions == int(Direction.BACKWARD))

    def checkShapes(self) -> None:
        expected = (self.dim, self.dim + self.relationWidth)
        if self.v.shape != expected:
            raise ShapeError(f"{self.vKey} has shape {self.v.shape}, expected {expected}")

    def blocks(self) -> Dict[str, np.ndarray]:
        return {self.qtKey: self.qtTokens, self.vKey: self.v}


@dataclass
class PosteriorParams:
    """Variational posterior ψ: its own recognition and inverse-reasoning halves."""

    recognition: RecognitionParams
    reasoning: ReasoningParams


@dataclass
class VrnParams:
    """θ1, θ2 and ψ; with sharePosterior the posterior halves alias θ1 and θ2."""

    settings: ModelConfig
    recognition: RecognitionParams
    reasoning: ReasoningParams
    posterior: PosteriorParams

    def blocks(self) -> Dict[str, np.ndarray]:
        blocks: Dict[str, np.ndarray] = {}
        for part in (self.recognition, self.reasoning, self.posterior.recognition, self.posterior.reasoning):
            for name, block in part.blocks().items():
                blocks.setdefault(name, block)
        return blocks

    @property
    def dim(self) -> int:
        return self.settings.dim

    @property
    def numRelations(self) -> int:
        return self.reasoning.numRelations

    @property
    def vocabSize(self) -> int:
        return self.recognition.entTokens.shape[0]

    def copy(self) -> "VrnParams":
        return VrnParams.fromBlocks(self.settings, self.numRelations, {k: v.copy() for k, v in self.blocks().items()})

    @classmethod
    def fromBlocks(cls, settings: ModelConfig, numRelations: int, blocks: Dict[str, np.ndarray]) -> "VrnParams":
        """Rebuild the parameter structure around existing arrays (no copies)."""
        mode = settings.recognitionMode

        def recognition(prefix: str) -> RecognitionParams:
            return RecognitionParams(
                prefix=prefix,
                mode=mode,
                entTokens=blocks[f"{prefix}.entTokens"],
                nameTokens=blocks.get(f"{prefix}.nameTokens"),
                freeW=blocks.get(f"{prefix}.freeW"),
            )

        def reasoning(prefix: str) -> ReasoningParams:
            params = ReasoningParams(
                prefix=prefix,
                qtTokens=blocks[f"{prefix}.qtTokens"],
                v=blocks[f"{prefix}.v"],
                numRelations=numRelations,
                directional=settings.directionalRelations,
            )
            params.checkShapes()
            return params

        theta1 = recognition("theta1")
        theta2 = reasoning("theta2")
        if settings.sharePosterior:
            psi = PosteriorParams(theta1, theta2)
        else:
            psi = PosteriorParams(recognition("psi"), reasoning("psi"))
        return cls(settings, theta1, theta2, psi)


def initParams(
    settings: ModelConfig,
    graph: KnowledgeGraph,
    vocab: Vocabulary,
    rng: np.random.Generator
) -> VrnParams:
    """
    Draw every parameter block uniformly from [-initScale, initScale].

    Args:
        settings: Model shapes and switches
        graph: Knowledge graph (sizes |V| and |R|)
        vocab: Token vocabulary shared by all token tables
        rng: Seeded generator ("init" stream)

    Returns:
        Fresh VrnParams
    """
    d = settings.dim
    relationWidth = graph.numRelations * (2 if settings.directionalRelations else 1)
    scale = settings.initScale

    def draw(*shape: int) -> np.ndarray:
        return rng.uniform(-scale, scale, size=shape)

    blocks: Dict[str, np.ndarray] = {}
    groups = [("theta1", "theta2")]
    if not settings.sharePosterior:
        groups.append(("psi", "psi"))
    for recogPrefix, reasonPrefix in groups:
        blocks[f"{recogPrefix}.entTokens"] = draw(len(vocab), d)
        if settings.recognitionMode == NAME_BOW:
            blocks[f"{recogPrefix}.nameTokens"] = draw(len(vocab), d)
        else:
            blocks[f"{recogPrefix}.freeW"] = draw(graph.numEntities, d)
        blocks[f"{reasonPrefix}.qtTokens"] = draw(len(vocab), d)
        blocks[f"{reasonPrefix}.v"] = draw(d, d + relationWidth)

    params = VrnParams.fromBlocks(settings, graph.numRelations, blocks)
    logger.info(f"Initialized parameters: d={d}, |R|={graph.numRelations}, vocab={len(vocab)}, mode={settings.recognitionMode}")
    return params


class NameIndex:
    """Entity-name token ids and the |V| x vocab averaging operator used for name-BOW W_y."""

    def __init__(self, graph: KnowledgeGraph, vocab: Vocabulary):
        self.tokenIds: List[np.ndarray] = [vocab.encode(tokens) for tokens in graph.entityTokens]
        rows, cols, vals = [], [], []
        for e, ids in enumerate(self.tokenIds):
            for t in ids:
                rows.append(e)
                cols.append(int(t))
                vals.append(1.0 / len(ids))
        # Duplicate (row, col) pairs are summed, so repeated name tokens keep their multiplicity.
        self.averager = sparse.csr_matrix((vals, (rows, cols)), shape=(graph.numEntities, len(vocab)))
        self.hasEmpty = any(len(ids) == 0 for ids in self.tokenIds)

    def rows(self, entities: np.ndarray) -> sparse.csr_matrix:
        return self.averager[entities]
