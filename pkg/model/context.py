from dataclasses import dataclass

from knowledge.kgStore import KnowledgeGraph
from knowledge.scope import ScopeCache
from knowledge.vocabulary import Vocabulary

from .params import NameIndex


@dataclass
class ModelContext:
    """Read-only data every kernel needs besides the parameters: graph, vocab, names, scopes."""

    graph: KnowledgeGraph
    vocab: Vocabulary
    names: NameIndex
    scopes: ScopeCache

    @property
    def hops(self) -> int:
        return self.scopes.hops

    @classmethod
    def build(cls, graph: KnowledgeGraph, vocab: Vocabulary, hops: int) -> "ModelContext":
        return cls(graph, vocab, NameIndex(graph, vocab), ScopeCache(graph, hops))

    def withHops(self, hops: int) -> "ModelContext":
        if hops == self.hops:
            return self
        return ModelContext(self.graph, self.vocab, self.names, ScopeCache(self.graph, hops))
