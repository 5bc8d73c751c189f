from dataclasses import dataclass, field
from typing import List, Optional, Tuple


@dataclass
class QAItem:
    """
    One question-answer pair.

    `topicEntity` is set only for labeled items. `sourceEntity` is the entity
    the generator actually asked about; it is never written to disk and is
    None for items read back from a QA file without brackets.
    """

    tokens: List[str]
    answers: Tuple[int, ...]
    hops: int
    typeId: str = ""
    topicEntity: Optional[int] = None
    sourceEntity: Optional[int] = None
    mentionSpan: Optional[Tuple[int, int]] = None

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    @property
    def isLabeled(self) -> bool:
        return self.topicEntity is not None

    @property
    def labeledText(self) -> str:
        """Surface text with the topic mention in square brackets (labeled items only)."""
        if self.topicEntity is None or self.mentionSpan is None:
            return self.text
        start, end = self.mentionSpan
        return " ".join(self.tokens[:start] + ["[" + " ".join(self.tokens[start:end]) + "]"] + self.tokens[end:])


@dataclass
class DatasetSplit:
    train: List[QAItem] = field(default_factory=list)
    validation: List[QAItem] = field(default_factory=list)
    test: List[QAItem] = field(default_factory=list)

    def items(self):
        return {"train": self.train, "validation": self.validation, "test": self.test}.items()
