"""
Question Template Module

Relation paths and surface patterns for the movie question types: 12 one-hop,
21 two-hop and 15 three-hop types. Each type carries 10 patterns with an
`{entity}` slot for the topic entity.
"""
from dataclasses import dataclass
from itertools import product
from typing import Dict, List, Sequence, Set, Tuple

from knowledge.kgStore import Direction
from knowledge.vocabulary import tokenize

PATTERNS_PER_TYPE = 10

# Relation linking a movie to each non-movie entity class (movie is the subject).
CLASS_RELATIONS: Dict[str, str] = {
    "actor": "starred_actors",
    "director": "directed_by",
    "writer": "written_by",
    "genre": "has_genre",
    "year": "release_year",
    "language": "in_language",
}
ROLES = ("actor", "director", "writer")
ATTRIBUTES = ("actor", "director", "writer", "genre", "year", "language")

PathStep = Tuple[str, Direction]


@dataclass(frozen=True)
class QuestionTemplate:
    typeId: str
    path: Tuple[PathStep, ...]
    patterns: Tuple[str, ...]

    def __post_init__(self):
        if not self.path:
            raise ValueError(f"template {self.typeId} has an empty relation path")
        if not self.patterns:
            raise ValueError(f"template {self.typeId} needs at least one surface pattern")

    @property
    def hops(self) -> int:
        return len(self.path)

    def render(self, patternIndex: int, entityName: str) -> str:
        return self.patterns[patternIndex].format(entity=entityName)


# Question stems asking for one attribute class of a set of movies; {movies} is a noun phrase.
_ASK = {
    "actor": ["who acted in {movies}", "who starred in {movies}", "which actors appeared in {movies}",
              "who are the actors in {movies}", "name the cast of {movies}"],
    "director": ["who directed {movies}", "which directors made {movies}", "who was behind the camera for {movies}",
                 "name the directors of {movies}", "who is the director of {movies}"],
    "writer": ["who wrote {movies}", "which writers scripted {movies}", "who are the screenwriters of {movies}",
               "name the writers of {movies}", "who penned {movies}"],
    "genre": ["what genres are {movies}", "what types are {movies}", "which genres do {movies} belong to",
              "what kind of films are {movies}", "name the genres of {movies}"],
    "year": ["when were {movies} released", "what year did {movies} come out", "in which years were {movies} released",
             "when did {movies} premiere", "what are the release years of {movies}"],
    "language": ["what languages are {movies} in", "which languages are spoken in {movies}",
                 "what are the main languages of {movies}", "in what language were {movies} made",
                 "name the languages of {movies}"],
    "movie": ["which movies are {movies}", "what are {movies}", "name {movies}", "list {movies}",
              "which films are {movies}"],
}

# Noun phrases for the movies linked to a topic entity of the given class.
_MOVIES_OF = {
    "movie": ["{entity}", "the movie {entity}", "the film {entity}", "{entity} the film", "the picture {entity}"],
    "actor": ["the movies starring {entity}", "the films {entity} acted in", "films featuring {entity}",
              "the movies acted by {entity}", "{entity} starred movies"],
    "director": ["the films directed by {entity}", "the movies {entity} directed", "{entity} directed films",
                 "the movies made by director {entity}", "films helmed by {entity}"],
    "writer": ["the movies written by {entity}", "the films {entity} wrote", "{entity} written films",
               "the screenplays by {entity}", "movies scripted by {entity}"],
    "genre": ["the {entity} movies", "films of genre {entity}", "movies in the {entity} genre",
              "the {entity} films", "pictures of type {entity}"],
    "year": ["the movies released in {entity}", "films from {entity}", "the {entity} releases",
             "movies that came out in {entity}", "films released in year {entity}"],
    "language": ["the movies in {entity}", "films spoken in {entity}", "the {entity} language films",
                 "movies made in {entity}", "pictures in the {entity} language"],
}

# Noun phrases for the movies sharing a role with the topic movie.
_SHARING = {
    "actor": ["the films that share actors with {entity}", "the movies starring the actors of {entity}",
              "films featuring the cast of {entity}", "the movies acted by {entity} actors",
              "films whose actors also starred in {entity}"],
    "director": ["the films that share directors with {entity}", "the movies directed by the director of {entity}",
                 "films made by the directors of {entity}", "the movies whose directors also directed {entity}",
                 "other films by the director of {entity}"],
    "writer": ["the films that share writers with {entity}", "the movies written by the writer of {entity}",
               "films by the screenwriters of {entity}", "the movies whose writers also wrote {entity}",
               "other films by the writer of {entity}"],
}

# Two-hop questions that return to movies through a role.
_CO_MOVIES = {
    "actor": ["the actors of {entity} also starred in which films", "which movies share actors with {entity}",
              "what other films feature the cast of {entity}", "the cast of {entity} appeared in which movies",
              "which films star actors from {entity}"],
    "director": ["the director of {entity} also directed which films", "which movies share directors with {entity}",
                 "what other films did the director of {entity} make", "which films come from the director of {entity}",
                 "the directors of {entity} made which other movies"],
    "writer": ["the writer of {entity} also wrote which films", "which movies share writers with {entity}",
               "what other films did the writer of {entity} write", "which films come from the screenwriter of {entity}",
               "the writers of {entity} wrote which other movies"],
}

# Two-hop questions that return to the topic's class through movies.
_CO_WORKERS = {
    "actor": ["who co-starred with {entity}", "which actors appeared alongside {entity}",
              "who acted together with {entity}", "name the co-stars of {entity}",
              "who starred in films with {entity}"],
    "director": ["who directed movies together with {entity}", "which directors co-directed with {entity}",
                 "who shared directing credits with {entity}", "name the co-directors of {entity}",
                 "who directed films alongside {entity}"],
    "writer": ["who wrote films together with {entity}", "which writers co-wrote with {entity}",
               "who shared writing credits with {entity}", "name the co-writers of {entity}",
               "who wrote movies alongside {entity}"],
}

# One-hop stems for attributes of a single movie.
_MOVIE_ATTRIBUTE = {
    "actor": ["who acted in {entity}", "who starred in {entity}", "the movie {entity} starred who",
              "which actors were in {entity}", "who are the actors in the film {entity}"],
    "director": ["who directed {entity}", "who is the director of {entity}", "the film {entity} was directed by who",
                 "which director made {entity}", "who was the director of the movie {entity}"],
    "writer": ["who wrote {entity}", "who is the writer of {entity}", "the movie {entity} was written by who",
               "who wrote the screenplay for {entity}", "which writer scripted the film {entity}"],
    "genre": ["what genre is {entity}", "what type of film is {entity}", "which genre does {entity} belong to",
              "what kind of movie is {entity}", "the film {entity} is what genre"],
    "year": ["when was {entity} released", "what year did {entity} come out", "in which year was {entity} released",
             "when did the movie {entity} premiere", "the film {entity} was released when"],
    "language": ["what language is {entity} in", "which language is spoken in {entity}",
                 "what is the main language of {entity}", "in what language was {entity} made",
                 "the movie {entity} is in which language"],
}


def _pick(stems: Sequence[str], phrases: Sequence[str], slot: str) -> Tuple[str, ...]:
    """PATTERNS_PER_TYPE distinct stem/phrase combinations, spread over the grid."""
    grid = list(product(stems, phrases))
    stride = len(grid) / PATTERNS_PER_TYPE
    return tuple(grid[int(i * stride)][0].format(**{slot: grid[int(i * stride)][1]}) for i in range(PATTERNS_PER_TYPE))


def _spread(patterns: Sequence[str], prefixes: Sequence[str] = ("", "can you tell me ")) -> Tuple[str, ...]:
    """Complete patterns doubled up with a polite prefix."""
    return tuple(prefix + pattern for prefix, pattern in list(product(prefixes, patterns))[:PATTERNS_PER_TYPE])


def _toMovie(cls: str) -> PathStep:
    return (CLASS_RELATIONS[cls], Direction.BACKWARD)


def _fromMovie(cls: str) -> PathStep:
    return (CLASS_RELATIONS[cls], Direction.FORWARD)


def oneHopTemplates() -> List[QuestionTemplate]:
    templates = []
    for cls in ATTRIBUTES:
        templates.append(QuestionTemplate(f"movie_to_{cls}", (_fromMovie(cls),), _spread(_MOVIE_ATTRIBUTE[cls])))
    for cls in ATTRIBUTES:
        templates.append(QuestionTemplate(
            f"{cls}_to_movie", (_toMovie(cls),), _pick(_ASK["movie"], _MOVIES_OF[cls], "movies")
        ))
    return templates


def twoHopTemplates() -> List[QuestionTemplate]:
    templates = []
    for source in ROLES:
        for target in ATTRIBUTES:
            path = (_toMovie(source), _fromMovie(target))
            if source == target:
                patterns = _spread(_CO_WORKERS[source])
            else:
                patterns = _pick(_ASK[target], _MOVIES_OF[source], "movies")
            templates.append(QuestionTemplate(f"{source}_to_movie_to_{target}", path, patterns))
    for role in ROLES:
        templates.append(QuestionTemplate(
            f"movie_to_{role}_to_movie", (_fromMovie(role), _toMovie(role)), _spread(_CO_MOVIES[role])
        ))
    return templates


def threeHopTemplates() -> List[QuestionTemplate]:
    """Movie to role to movie to a different attribute; same-role chains are left out."""
    templates = []
    for role in ROLES:
        for target in ATTRIBUTES:
            if target == role:
                continue
            path = (_fromMovie(role), _toMovie(role), _fromMovie(target))
            templates.append(QuestionTemplate(
                f"movie_to_{role}_to_movie_to_{target}", path, _pick(_ASK[target], _SHARING[role], "movies")
            ))
    return templates


def allTemplates() -> List[QuestionTemplate]:
    return oneHopTemplates() + twoHopTemplates() + threeHopTemplates()


def templatesForHop(hops: int) -> List[QuestionTemplate]:
    return [t for t in allTemplates() if t.hops == hops]


def templateVocabulary() -> Set[str]:
    """Every token used by a pattern outside the entity slot."""
    words: Set[str] = set()
    for template in allTemplates():
        for pattern in template.patterns:
            words.update(tokenize(pattern.replace("{entity}", " ")))
    return words
