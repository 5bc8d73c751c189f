import logging
from pathlib import Path
from typing import List, Optional, Sequence

from knowledge.kgStore import GraphFormatError, KnowledgeGraph

from .entityLabeler import NameMatcher, parseBrackets
from .qaItem import QAItem

logger = logging.getLogger(__name__)


def qaFileName(split: str, hops: int) -> str:
    return f"qa_{split}_{hops}hop.txt"


def typesFileName(split: str, hops: int) -> str:
    return f"qa_types_{split}_{hops}hop.txt"


def writeQaFile(path, items: Sequence[QAItem], graph: KnowledgeGraph) -> Path:
    """One item per line: `question with [entity] brackets<TAB>answer1|answer2|...`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for item in items:
            answers = "|".join(graph.entityNames[a] for a in item.answers)
            f.write(f"{item.labeledText}\t{answers}\n")
    return path


def writeTypesFile(path, items: Sequence[QAItem]) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        for item in items:
            f.write(item.typeId + "\n")
    return path


def readQaFile(
    path,
    graph: KnowledgeGraph,
    hops: int,
    typesPath=None,
    matcher: Optional[NameMatcher] = None
) -> List[QAItem]:
    """
    Read a QA file (and its optional question-type sidecar).

    Bracketed mentions become topic labels; answers are resolved by exact
    entity name.
    """
    matcher = matcher or NameMatcher(graph.entityNames)
    typeIds: List[str] = []
    if typesPath is not None and Path(typesPath).is_file():
        typeIds = Path(typesPath).read_text(encoding="utf-8").splitlines()

    items: List[QAItem] = []
    with open(path, encoding="utf-8") as f:
        for lineNumber, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            question, sep, answerField = line.partition("\t")
            if not sep or not answerField:
                raise GraphFormatError("expected `question<TAB>answers`", lineNumber)
            tokens, span = parseBrackets(question)
            topic = None
            if span is not None:
                match = matcher.matchAt(tokens, span[0])
                if match is None or match[0] != span[1]:
                    raise GraphFormatError(f"bracketed mention is not an entity name: {question!r}", lineNumber)
                topic = graph.entityId(match[1])
            answers = tuple(sorted(graph.entityId(name) for name in answerField.split("|")))
            items.append(QAItem(
                tokens=tokens,
                answers=answers,
                hops=hops,
                typeId=typeIds[len(items)] if len(items) < len(typeIds) else "",
                topicEntity=topic,
                sourceEntity=topic,
                mentionSpan=span,
            ))
    logger.info(f"Read {len(items)} items from {path}")
    return items
