import re
import string
from typing import Dict, Iterable, List, Sequence

import numpy as np

UNK_TOKEN = "<unk>"
UNK_INDEX = 0

_punctuation = re.compile(f"[{re.escape(string.punctuation)}]")


def tokenize(text: str) -> List[str]:
    """Lowercase, strip punctuation, split on whitespace."""
    return _punctuation.sub(" ", text.lower()).split()


class Vocabulary:
    """Token to dense index map with UNK reserved at index 0."""

    def __init__(self, tokens: Sequence[str] = ()):
        self.tokens: List[str] = [UNK_TOKEN]
        self.index: Dict[str, int] = {UNK_TOKEN: UNK_INDEX}
        for token in tokens:
            self.add(token)

    def add(self, token: str) -> int:
        if token not in self.index:
            self.index[token] = len(self.tokens)
            self.tokens.append(token)
        return self.index[token]

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def lookup(self, token: str) -> int:
        return self.index.get(token, UNK_INDEX)

    def encode(self, tokens: Iterable[str]) -> np.ndarray:
        """Map tokens to indices; unknown tokens map to UNK."""
        return np.array([self.lookup(t) for t in tokens], dtype=np.int64)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for token in self.tokens[1:]:
                f.write(token + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as f:
            return cls(line.rstrip("\n") for line in f if line.rstrip("\n"))


def buildVocab(tokenStreams: Iterable[Iterable[str]]) -> Vocabulary:
    """
    Build a vocabulary from token lists in first-appearance order.

    Args:
        tokenStreams: Iterable of token lists

    Returns:
        Vocabulary containing UNK plus every distinct token
    """
    vocab = Vocabulary()
    for tokens in tokenStreams:
        for token in tokens:
            vocab.add(token)
    return vocab
