import logging
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from .kgStore import Direction, KnowledgeGraph

logger = logging.getLogger(__name__)


class ScopeError(ValueError):
    """Invalid scope request."""


@dataclass(frozen=True)
class ParentEdge:
    parent: int  # position of the parent in Scope.nodes
    relation: int
    direction: Direction  # traversal direction from parent to child


@dataclass
class ScopeNode:
    entity: int
    hop: int
    parents: List[ParentEdge] = field(default_factory=list)


@dataclass
class ScopeLevel:
    """All parent edges entering the nodes at one hop, as flat arrays."""

    hop: int
    nodeStart: int
    nodeEnd: int
    parentStart: int
    parentEnd: int
    childPos: np.ndarray
    parentPos: np.ndarray
    relations: np.ndarray
    directions: np.ndarray


class Scope:
    """
    Hop-ordered subgraph within T undirected hops of a source entity.

    Nodes are sorted by (hop, entity id), so every hop occupies a contiguous
    slice and parents always precede their children.
    """

    def __init__(self, source: int, hops: int, nodes: List[ScopeNode]):
        self.source = source
        self.hops = hops
        self.nodes = nodes
        self.index: Dict[int, int] = {n.entity: i for i, n in enumerate(nodes)}
        self.entities = np.array([n.entity for n in nodes], dtype=np.int64)
        self.nodeHops = np.array([n.hop for n in nodes], dtype=np.int64)
        self.parentCounts = np.array([len(n.parents) for n in nodes], dtype=np.float64)
        self.levels = self._buildLevels()

    def _buildLevels(self) -> List[ScopeLevel]:
        bounds = np.searchsorted(self.nodeHops, np.arange(self.hops + 2))
        levels = []
        for hop in range(1, self.hops + 1):
            start, end = int(bounds[hop]), int(bounds[hop + 1])
            if start == end:
                break
            childPos, parentPos, relations, directions = [], [], [], []
            for pos in range(start, end):
                for edge in self.nodes[pos].parents:
                    childPos.append(pos)
                    parentPos.append(edge.parent)
                    relations.append(edge.relation)
                    directions.append(int(edge.direction))
            levels.append(ScopeLevel(
                hop=hop,
                nodeStart=start,
                nodeEnd=end,
                parentStart=int(bounds[hop - 1]),
                parentEnd=start,
                childPos=np.array(childPos, dtype=np.int64),
                parentPos=np.array(parentPos, dtype=np.int64),
                relations=np.array(relations, dtype=np.int64),
                directions=np.array(directions, dtype=np.int64),
            ))
        return levels

    def __len__(self) -> int:
        return len(self.nodes)

    def contains(self, a: int) -> bool:
        return a in self.index

    def position(self, a: int) -> int:
        try:
            return self.index[a]
        except KeyError:
            raise ScopeError(f"entity {a} is not within {self.hops} hops of {self.source}") from None

    @property
    def numParentEdges(self) -> int:
        return int(self.parentCounts.sum())


def computeScope(graph: KnowledgeGraph, y: int, hops: int) -> Scope:
    """
    Compute the T-hop scope of an entity.

    Args:
        graph: Knowledge graph
        y: Source entity
        hops: Maximum undirected distance T

    Returns:
        Scope whose parent lists hold every neighbor one hop closer to y
    """
    graph.checkEntity(y)
    if hops < 0:
        raise ScopeError(f"hops must be >= 0, got {hops}")

    dist = {y: 0}
    frontier = deque([y])
    while frontier:
        e = frontier.popleft()
        if dist[e] == hops:
            continue
        for nbr, _, _ in graph.neighbors(e):
            if nbr not in dist:
                dist[nbr] = dist[e] + 1
                frontier.append(nbr)

    ordered = sorted(dist, key=lambda e: (dist[e], e))
    nodes = [ScopeNode(entity=e, hop=dist[e]) for e in ordered]
    position = {e: i for i, e in enumerate(ordered)}

    for pos, node in enumerate(nodes):
        if node.hop == hops:
            continue
        for nbr, relation, direction in graph.neighbors(node.entity):
            if dist.get(nbr) == node.hop + 1:
                nodes[position[nbr]].parents.append(ParentEdge(pos, relation, direction))

    return Scope(y, hops, nodes)


def contains(scope: Scope, a: int) -> bool:
    return scope.contains(a)


def formatScope(scope: Scope, graph: KnowledgeGraph) -> str:
    """Debug dump: one node per line `hop<TAB>entity_name<TAB>parent_count`."""
    return "".join(
        f"{node.hop}\t{graph.entityNames[node.entity]}\t{len(node.parents)}\n"
        for node in scope.nodes
    )


class ScopeCache:
    """Memoized scopes for one graph and hop budget; safe to share between threads."""

    def __init__(self, graph: KnowledgeGraph, hops: int):
        self.graph = graph
        self.hops = hops
        self._scopes: Dict[int, Scope] = {}
        self._lock = threading.Lock()

    def get(self, y: int) -> Scope:
        scope = self._scopes.get(y)
        if scope is None:
            scope = computeScope(self.graph, y, self.hops)
            with self._lock:
                scope = self._scopes.setdefault(y, scope)
        return scope

    def __len__(self) -> int:
        return len(self._scopes)
