# Knowledge graph, vocabulary and scope module
from .vocabulary import Vocabulary, buildVocab, tokenize, UNK_INDEX, UNK_TOKEN
from .kgStore import (
    Direction,
    GraphFormatError,
    KnowledgeGraph,
    Triple,
    UnknownEntityError,
    dumpEntityNames,
    dumpTriples,
    loadGraph,
)
from .scope import ParentEdge, Scope, ScopeCache, ScopeError, ScopeNode, computeScope, contains, formatScope
