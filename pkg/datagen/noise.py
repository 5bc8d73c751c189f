import logging
from dataclasses import replace
from typing import Dict, List

import numpy as np

from config.settings import NoiseConfig

from .qaItem import QAItem

logger = logging.getLogger(__name__)

# Fixed single-token synonym table over template wording.
SYNONYMS: Dict[str, List[str]] = {
    "movies": ["films", "pictures"],
    "movie": ["film", "picture"],
    "films": ["movies", "pictures"],
    "film": ["movie", "picture"],
    "directed": ["helmed", "made"],
    "director": ["filmmaker"],
    "directors": ["filmmakers"],
    "wrote": ["penned", "scripted"],
    "writer": ["screenwriter", "author"],
    "writers": ["screenwriters", "authors"],
    "acted": ["starred", "appeared", "played"],
    "starred": ["acted", "appeared"],
    "actors": ["performers", "cast"],
    "released": ["premiered", "published"],
    "genres": ["types", "categories"],
    "genre": ["type", "category"],
    "languages": ["tongues"],
    "language": ["tongue"],
    "who": ["which person"],
    "what": ["which"],
    "which": ["what"],
    "name": ["list"],
}


def applyNoise(item: QAItem, cfg: NoiseConfig, rng: np.random.Generator) -> QAItem:
    """
    Perturb the wording of a question outside its entity mention.

    Each non-entity token is independently dropped with dropProbability,
    otherwise swapped for a synonym with synonymProbability. Entity tokens and
    the answer set are never altered.

    Args:
        item: Question with a known mention span
        cfg: Noise probabilities
        rng: Generator (the "noise" stream or a per-item child)

    Returns:
        New QAItem with shifted mention span
    """
    if item.mentionSpan is None:
        raise ValueError("noise needs the entity mention span of the question")
    start, end = item.mentionSpan
    tokens: List[str] = []
    newStart = newEnd = 0
    for i, token in enumerate(item.tokens):
        if i == start:
            newStart = len(tokens)
        if start <= i < end:
            tokens.append(token)
            if i == end - 1:
                newEnd = len(tokens)
            continue
        # Both draws happen for every token so the stream stays aligned across configs.
        dropDraw, swapDraw = rng.random(), rng.random()
        if dropDraw < cfg.dropProbability:
            continue
        choices = SYNONYMS.get(token)
        if choices and swapDraw < cfg.synonymProbability:
            token = choices[int(rng.integers(len(choices)))]
            tokens.extend(token.split())
        else:
            tokens.append(token)
    if end == start:
        newEnd = newStart
    return replace(item, tokens=tokens, mentionSpan=(newStart, newEnd))
