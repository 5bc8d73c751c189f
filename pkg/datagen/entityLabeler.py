import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from knowledge.vocabulary import tokenize

logger = logging.getLogger(__name__)


@dataclass
class LabelResult:
    text: str
    tokens: List[str]
    spans: List[Tuple[int, int]] = field(default_factory=list)
    names: List[str] = field(default_factory=list)

    @property
    def ambiguous(self) -> bool:
        return len(self.spans) > 1


class NameMatcher:
    """Greedy longest-match lookup of entity names over token sequences."""

    def __init__(self, names: Iterable[str]):
        self.byTokens: Dict[Tuple[str, ...], str] = {}
        for name in names:
            key = tuple(tokenize(name))
            if key:
                self.byTokens.setdefault(key, name)
        self.maxLength = max((len(k) for k in self.byTokens), default=0)

    def matchAt(self, tokens: Sequence[str], start: int) -> Optional[Tuple[int, str]]:
        """Longest name starting at `start`, as (end, name)."""
        for length in range(min(self.maxLength, len(tokens) - start), 0, -1):
            name = self.byTokens.get(tuple(tokens[start:start + length]))
            if name is not None:
                return start + length, name
        return None

    def label(self, text: str) -> LabelResult:
        """
        Bracket every entity mention, scanning left to right and preferring the
        longest name at each position. Text without a mention is returned as is.
        """
        tokens = tokenize(text)
        result = LabelResult(text="", tokens=tokens)
        out: List[str] = []
        pos = 0
        while pos < len(tokens):
            match = self.matchAt(tokens, pos)
            if match is None:
                out.append(tokens[pos])
                pos += 1
                continue
            end, name = match
            out.append("[" + " ".join(tokens[pos:end]) + "]")
            result.spans.append((pos, end))
            result.names.append(name)
            pos = end
        result.text = " ".join(out) if result.spans else text
        return result


def labelEntities(text: str, names: Union[NameMatcher, Sequence[str]]) -> LabelResult:
    """
    Bracket entity mentions in a question.

    Args:
        text: Raw question text
        names: Entity names, or a prebuilt NameMatcher

    Returns:
        LabelResult; `ambiguous` is set when more than one entity was bracketed
    """
    matcher = names if isinstance(names, NameMatcher) else NameMatcher(names)
    return matcher.label(text)


def parseBrackets(text: str) -> Tuple[List[str], Optional[Tuple[int, int]]]:
    """Tokens of a bracketed question and the token span of its first bracketed mention."""
    before, sep, rest = text.partition("[")
    if not sep:
        return tokenize(text), None
    mention, sep, after = rest.partition("]")
    if not sep:
        return tokenize(text), None
    head, body = tokenize(before), tokenize(mention)
    return head + body + tokenize(after), (len(head), len(head) + len(body))
