import logging
from typing import Dict, List, Set, Tuple

import numpy as np
from faker import Faker

from config.settings import KgGenConfig
from knowledge.kgStore import KnowledgeGraph, Triple
from knowledge.vocabulary import tokenize
from templates.questionTemplates import CLASS_RELATIONS, templateVocabulary
from utils.seeding import substream

from .noise import SYNONYMS

logger = logging.getLogger(__name__)

RELATIONS = ("starred_actors", "directed_by", "written_by", "has_genre", "release_year", "in_language")

GENRES = [
    "comedy", "drama", "thriller", "horror", "romance", "western", "documentary", "animation",
    "fantasy", "mystery", "musical", "adventure", "crime", "war", "biography", "family",
    "noir", "satire", "sport", "history", "action", "superhero", "mockumentary", "melodrama",
]
LANGUAGES = [
    "english", "french", "german", "italian", "spanish", "japanese", "korean", "mandarin",
    "cantonese", "hindi", "russian", "swedish", "danish", "dutch", "polish", "portuguese",
    "turkish", "greek", "hebrew", "arabic", "persian", "finnish", "norwegian", "czech",
]
FIRST_YEAR, LAST_YEAR = 1930, 2029


class TemplateCoverageError(ValueError):
    """Generator settings cannot cover every relation a template walks."""


class _NameFactory:
    """Seeded pseudo-names that never collide with each other or with template wording."""

    def __init__(self, seed: int, reserved: Set[str]):
        self.fake = Faker("en_US")
        self.fake.seed_instance(seed)
        self.reserved = reserved
        self.taken: Set[Tuple[str, ...]] = set()

    def _accept(self, name: str) -> bool:
        tokens = tuple(tokenize(name))
        if not tokens or tokens in self.taken:
            return False
        if any(not t.isalpha() or t in self.reserved for t in tokens):
            return False
        self.taken.add(tokens)
        return True

    def person(self) -> str:
        while True:
            parts = [self.fake.first_name(), self.fake.last_name()]
            if self.fake.random.random() < 0.25:
                parts.insert(1, self.fake.first_name())
            name = " ".join(parts)
            if self._accept(name):
                return name

    def title(self) -> str:
        while True:
            words = [self.fake.word().capitalize() for _ in range(self.fake.random.choice((2, 2, 3)))]
            name = " ".join(words)
            if self._accept(name):
                return name

    def fromList(self, base: List[str], index: int) -> str:
        name = base[index]
        while not self._accept(name):
            name = f"{self.fake.word()} {base[index % len(base)]}"
        return name


def _wording() -> Set[str]:
    words = templateVocabulary()
    for choices in SYNONYMS.values():
        for choice in choices:
            words.update(tokenize(choice))
    return words


def _edgeCount(rng: np.random.Generator, mean: float, available: int) -> int:
    """At least one edge; expected count equals mean once mean >= 1."""
    return min(available, 1 + int(rng.poisson(max(mean - 1.0, 0.0))))


def generateKg(cfg: KgGenConfig) -> KnowledgeGraph:
    """
    Generate a synthetic movie knowledge graph.

    Every movie gets at least one edge of each relation; extra edges are
    Poisson-distributed so the expected count per movie is
    `<class>PerMovie * edgeDensity`.

    Args:
        cfg: Entity counts, edge densities and seed

    Returns:
        KnowledgeGraph with entities registered class by class (movies first)
    """
    counts = cfg.classCounts()
    for cls, count in counts.items():
        if count < 1:
            raise TemplateCoverageError(f"kg.{cls}s = {count}; every relation needs at least one {cls}")
    if cfg.years > LAST_YEAR - FIRST_YEAR + 1:
        raise TemplateCoverageError(f"kg.years = {cfg.years} exceeds the {LAST_YEAR - FIRST_YEAR + 1} available years")

    rng = substream(cfg.seed, "kg")
    reserved = _wording() | set(GENRES) | set(LANGUAGES)
    names = _NameFactory(cfg.seed, reserved)

    classNames: Dict[str, List[str]] = {"movie": [names.title() for _ in range(cfg.movies)]}
    for cls in ("actor", "director", "writer"):
        classNames[cls] = [names.person() for _ in range(counts[cls])]
    names.reserved = _wording()
    classNames["genre"] = [names.fromList(GENRES, i % len(GENRES)) for i in range(cfg.genres)]
    classNames["language"] = [names.fromList(LANGUAGES, i % len(LANGUAGES)) for i in range(cfg.languages)]
    years = np.sort(rng.choice(np.arange(FIRST_YEAR, LAST_YEAR + 1), size=cfg.years, replace=False))
    classNames["year"] = [str(y) for y in years]

    entityNames: List[str] = []
    offsets: Dict[str, int] = {}
    for cls in ("movie", "actor", "director", "writer", "genre", "language", "year"):
        offsets[cls] = len(entityNames)
        entityNames += classNames[cls]

    means = {
        "actor": cfg.actorsPerMovie,
        "director": cfg.directorsPerMovie,
        "writer": cfg.writersPerMovie,
        "genre": cfg.genresPerMovie,
        "year": cfg.yearsPerMovie,
        "language": cfg.languagesPerMovie,
    }
    relationIds = {name: i for i, name in enumerate(RELATIONS)}
    triples: List[Triple] = []
    for movie in range(cfg.movies):
        for relation in RELATIONS:
            cls = next(c for c, r in CLASS_RELATIONS.items() if r == relation)
            k = _edgeCount(rng, means[cls] * cfg.edgeDensity, counts[cls])
            for obj in np.sort(rng.choice(counts[cls], size=k, replace=False)):
                triples.append(Triple(offsets["movie"] + movie, relationIds[relation], offsets[cls] + int(obj)))

    graph = KnowledgeGraph(entityNames, list(RELATIONS), triples)
    logger.info(f"Generated KG: {graph.numEntities} entities, {graph.numTriples} triples (density {cfg.edgeDensity})")
    return graph
