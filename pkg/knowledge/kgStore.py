import logging
from dataclasses import dataclass
from enum import IntEnum
from typing import Dict, Iterable, List, Optional, TextIO, Tuple

from .vocabulary import tokenize

logger = logging.getLogger(__name__)


class Direction(IntEnum):
    """Traversal direction relative to the stored triple."""

    FORWARD = 0
    BACKWARD = 1

    @property
    def arrow(self) -> str:
        return "fwd" if self is Direction.FORWARD else "bwd"


class GraphFormatError(ValueError):
    """Malformed, dangling or duplicate input while loading a graph."""

    def __init__(self, message: str, lineNumber: Optional[int] = None):
        self.lineNumber = lineNumber
        if lineNumber is not None:
            message = f"line {lineNumber}: {message}"
        super().__init__(message)


class UnknownEntityError(KeyError):
    """Entity id or name not present in the graph."""

    def __str__(self) -> str:
        return f"unknown entity: {self.args[0]!r}"


@dataclass(frozen=True)
class Triple:
    subject: int
    relation: int
    object: int


Neighbor = Tuple[int, int, Direction]


class KnowledgeGraph:
    """
    Immutable typed directed graph with bidirectional adjacency.

    Entity and relation ids are dense, contiguous from 0, in order of first
    appearance. Safe for concurrent reads once constructed.
    """

    def __init__(
        self,
        entityNames: List[str],
        relationNames: List[str],
        triples: List[Triple],
        allowSelfLoops: bool = False
    ):
        self.entityNames = list(entityNames)
        self.relationNames = list(relationNames)
        self.triples = list(triples)
        self.allowSelfLoops = allowSelfLoops
        self.entityIndex: Dict[str, int] = {n: i for i, n in enumerate(self.entityNames)}
        self.relationIndex: Dict[str, int] = {n: i for i, n in enumerate(self.relationNames)}
        self.entityTokens: List[List[str]] = [tokenize(n) for n in self.entityNames]

        if len(self.entityIndex) != len(self.entityNames):
            raise GraphFormatError("duplicate entity name")

        self.outAdj: List[List[Tuple[int, int]]] = [[] for _ in self.entityNames]
        self.inAdj: List[List[Tuple[int, int]]] = [[] for _ in self.entityNames]
        seen = set()
        for t in self.triples:
            for endpoint in (t.subject, t.object):
                if not 0 <= endpoint < len(self.entityNames):
                    raise GraphFormatError(f"dangling entity reference {endpoint}")
            if not 0 <= t.relation < len(self.relationNames):
                raise GraphFormatError(f"unknown relation {t.relation}")
            if t.subject == t.object and not allowSelfLoops:
                raise GraphFormatError(f"self-loop on {self.entityNames[t.subject]!r}")
            if t in seen:
                raise GraphFormatError(f"duplicate triple {self.describe(t)}")
            seen.add(t)
            self.outAdj[t.subject].append((t.object, t.relation))
            self.inAdj[t.object].append((t.subject, t.relation))

        self._neighbors: List[List[Neighbor]] = []
        for e in range(len(self.entityNames)):
            merged = [(n, r, Direction.FORWARD) for n, r in self.outAdj[e]]
            merged += [(n, r, Direction.BACKWARD) for n, r in self.inAdj[e]]
            merged.sort(key=lambda item: (item[0], item[1], int(item[2])))
            self._neighbors.append(merged)

    @property
    def numEntities(self) -> int:
        return len(self.entityNames)

    @property
    def numRelations(self) -> int:
        return len(self.relationNames)

    @property
    def numTriples(self) -> int:
        return len(self.triples)

    def checkEntity(self, e: int) -> None:
        if not 0 <= e < len(self.entityNames):
            raise UnknownEntityError(e)

    def entityId(self, name: str) -> int:
        try:
            return self.entityIndex[name]
        except KeyError:
            raise UnknownEntityError(name) from None

    def neighbors(self, e: int) -> List[Neighbor]:
        """
        Undirected view of an entity's edges.

        Args:
            e: Entity id

        Returns:
            (neighbor, relation, direction) sorted by neighbor id, relation id,
            then direction; direction is FORWARD for triples (e, r, neighbor)
        """
        self.checkEntity(e)
        return self._neighbors[e]

    def describe(self, t: Triple) -> str:
        return f"({self.entityNames[t.subject]}, {self.relationNames[t.relation]}, {self.entityNames[t.object]})"

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, KnowledgeGraph)
            and self.entityNames == other.entityNames
            and self.relationNames == other.relationNames
            and self.triples == other.triples
        )


def loadGraph(
    triplesSource: Iterable[str],
    namesSource: Optional[Iterable[str]] = None,
    allowSelfLoops: bool = False,
    requireRegistered: bool = False
) -> KnowledgeGraph:
    """
    Load a graph from tab-separated triples.

    Args:
        triplesSource: Lines `subject<TAB>relation<TAB>object`
        namesSource: Optional lines of entity names to pre-register
        allowSelfLoops: Accept triples whose subject equals their object
        requireRegistered: Reject triples naming entities absent from namesSource

    Returns:
        KnowledgeGraph with ids in first-appearance order
    """
    entityNames: List[str] = []
    entityIndex: Dict[str, int] = {}
    relationNames: List[str] = []
    relationIndex: Dict[str, int] = {}

    def entity(name: str, lineNumber: Optional[int] = None) -> int:
        if name not in entityIndex:
            if lineNumber is not None and requireRegistered:
                raise GraphFormatError(f"dangling entity reference {name!r}", lineNumber)
            entityIndex[name] = len(entityNames)
            entityNames.append(name)
        return entityIndex[name]

    if namesSource is not None:
        for lineNumber, line in enumerate(namesSource, 1):
            name = line.rstrip("\r\n")
            if not name.strip():
                continue
            if name in entityIndex:
                raise GraphFormatError(f"duplicate entity name {name!r}", lineNumber)
            entity(name)

    triples: List[Triple] = []
    seen = set()
    for lineNumber, line in enumerate(triplesSource, 1):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3 or not all(p.strip() for p in parts):
            raise GraphFormatError(f"expected 3 tab-separated fields, got {len(parts)}", lineNumber)
        subjectName, relationName, objectName = parts
        if subjectName == objectName and not allowSelfLoops:
            raise GraphFormatError(f"self-loop on {subjectName!r}", lineNumber)
        if relationName not in relationIndex:
            relationIndex[relationName] = len(relationNames)
            relationNames.append(relationName)
        triple = Triple(entity(subjectName, lineNumber), relationIndex[relationName], entity(objectName, lineNumber))
        if triple in seen:
            raise GraphFormatError(f"duplicate triple {line!r}", lineNumber)
        seen.add(triple)
        triples.append(triple)

    if not triples:
        raise GraphFormatError("empty graph")

    graph = KnowledgeGraph(entityNames, relationNames, triples, allowSelfLoops=allowSelfLoops)
    logger.info(f"Loaded graph: {graph.numEntities} entities, {graph.numRelations} relations, {graph.numTriples} triples")
    return graph


def dumpTriples(graph: KnowledgeGraph, stream: TextIO) -> None:
    for t in graph.triples:
        stream.write(f"{graph.entityNames[t.subject]}\t{graph.relationNames[t.relation]}\t{graph.entityNames[t.object]}\n")


def dumpEntityNames(graph: KnowledgeGraph, stream: TextIO) -> None:
    for name in graph.entityNames:
        stream.write(name + "\n")
