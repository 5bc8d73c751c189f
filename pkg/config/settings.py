import os
from dataclasses import dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from dotenv import dotenv_values, load_dotenv

load_dotenv()


class ConfigError(ValueError):
    """Invalid configuration key or value."""


@dataclass
class KgGenConfig:
    """Configuration for the synthetic movie knowledge graph."""

    movies: int = 100
    actors: int = 80
    directors: int = 40
    writers: int = 40
    genres: int = 12
    languages: int = 8
    years: int = 20

    # Mean edges per movie for each relation class, scaled by edgeDensity.
    actorsPerMovie: float = 3.0
    directorsPerMovie: float = 1.0
    writersPerMovie: float = 1.5
    genresPerMovie: float = 1.5
    languagesPerMovie: float = 1.0
    yearsPerMovie: float = 1.0
    edgeDensity: float = 1.0

    seed: int = 0

    def classCounts(self) -> Dict[str, int]:
        return {
            "movie": self.movies,
            "actor": self.actors,
            "director": self.directors,
            "writer": self.writers,
            "genre": self.genres,
            "language": self.languages,
            "year": self.years,
        }


@dataclass
class QuestionGenConfig:
    """Configuration for question generation and splitting."""

    trainCount: int = 2000
    validationCount: int = 250
    testCount: int = 250
    labelFraction: float = 0.05
    maxAnswers: int = 50
    maxRetries: int = 50


@dataclass
class NoiseConfig:
    """Rule-based paraphrase noise applied to question wording."""

    enabled: bool = False
    synonymProbability: float = 0.0
    dropProbability: float = 0.0
    seed: int = 0


@dataclass
class ModelConfig:
    """Shapes and parameterization switches of the reasoning network."""

    dim: int = 64
    recognitionMode: str = "name-bow"
    directionalRelations: bool = False
    sharePosterior: bool = False
    initScale: float = 0.08
    baselineHidden: int = 64


@dataclass
class TrainConfig:
    """Configuration for pretraining and joint variational training."""

    learningRate: float = 0.05
    baselineLearningRate: float = 0.05
    samples: int = 8
    batchSize: int = 16
    epochs: int = 20
    pretrainEpochs: int = 10
    hops: int = 1
    decay: float = 0.9
    sigmaFloor: float = 1e-4
    varianceReduction: bool = True
    checkpointEvery: int = 500
    totalSteps: int = 0
    probeSize: int = 200


@dataclass
class InferenceConfig:
    """Configuration for beam inference."""

    beam: int = 1
    hops: int = 1
    jointScore: bool = False
    useTopicLabels: bool = False


@dataclass
class EvalConfig:
    """Configuration for evaluation and the supervised-embedding baseline."""

    baselineEpochs: int = 10
    baselineLearningRate: float = 0.1
    split: str = "test"


@dataclass
class Config:
    """Main application configuration (the run config)."""

    seed: int = 0
    outDir: str = "output"
    workers: int = 1
    hops: int = 1
    dataset: str = "synthetic"

    kg: KgGenConfig = field(default_factory=KgGenConfig)
    questions: QuestionGenConfig = field(default_factory=QuestionGenConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    inference: InferenceConfig = field(default_factory=InferenceConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    logLevel: str = field(default_factory=lambda: os.getenv("VRN_LOG_LEVEL", "INFO"))
    logFile: Optional[str] = field(default_factory=lambda: os.getenv("VRN_LOG_FILE") or None)

    @classmethod
    def fromFile(cls, path: str) -> "Config":
        """
        Build a configuration from a key-value file.

        Args:
            path: dotenv-format file with `section.field=value` lines

        Returns:
            Config with the file's values applied over the defaults
        """
        if not Path(path).is_file():
            raise ConfigError(f"config file not found: {path}")
        config = cls()
        config.applyValues(dotenv_values(path))
        return config

    def applyValues(self, values: Mapping[str, Any]) -> None:
        """Apply `section.field` or root `field` keys, coercing to field types."""
        for key, raw in values.items():
            target, name = self._resolve(key)
            current = getattr(target, name)
            try:
                setattr(target, name, _coerce(raw, current))
            except (TypeError, ValueError) as e:
                raise ConfigError(f"bad value for {key}: {raw!r} ({e})") from e

    def _resolve(self, key: str) -> Tuple[Any, str]:
        parts = key.split(".")
        target: Any = self
        for part in parts[:-1]:
            section = getattr(target, part, None) if _hasField(target, part) else None
            if section is None or not is_dataclass(section):
                raise ConfigError(f"unknown config key: {key}")
            target = section
        name = parts[-1]
        if not _hasField(target, name) or is_dataclass(getattr(target, name)):
            raise ConfigError(f"unknown config key: {key}")
        return target, name

    def validate(self) -> bool:
        """Validate every configuration invariant; raise ConfigError on the first failure."""
        checks = [
            (self.workers >= 1, "workers must be >= 1"),
            (self.hops in (1, 2, 3), "hops must be 1, 2 or 3"),
            (all(v >= 1 for v in self.kg.classCounts().values()), "kg class counts must be >= 1"),
            (self.kg.edgeDensity > 0, "kg.edgeDensity must be > 0"),
            (0.0 <= self.questions.labelFraction <= 1.0, "questions.labelFraction must be in [0,1]"),
            (self.questions.trainCount >= 1, "questions.trainCount must be >= 1"),
            (self.questions.maxAnswers >= 1, "questions.maxAnswers must be >= 1"),
            (0.0 <= self.noise.synonymProbability <= 1.0, "noise.synonymProbability must be in [0,1]"),
            (0.0 <= self.noise.dropProbability <= 1.0, "noise.dropProbability must be in [0,1]"),
            (self.model.dim >= 1, "model.dim must be >= 1"),
            (self.model.recognitionMode in ("name-bow", "free"), "model.recognitionMode must be name-bow or free"),
            (self.train.learningRate > 0, "train.learningRate must be > 0"),
            (self.train.samples >= 1, "train.samples must be >= 1"),
            (self.train.batchSize >= 1, "train.batchSize must be >= 1"),
            (self.train.hops >= 1, "train.hops must be >= 1"),
            (0.0 <= self.train.decay < 1.0, "train.decay must be in [0,1)"),
            (self.train.sigmaFloor > 0, "train.sigmaFloor must be > 0"),
            (self.inference.beam >= 1, "inference.beam must be >= 1"),
            (self.inference.hops >= 1, "inference.hops must be >= 1"),
            (self.eval.split in ("train", "validation", "test"), "eval.split must be train, validation or test"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        return True


def _hasField(obj: Any, name: str) -> bool:
    return is_dataclass(obj) and any(f.name == name for f in fields(obj))


def _coerce(raw: Any, current: Any) -> Any:
    if not isinstance(raw, str):
        return raw
    if isinstance(current, bool):
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError("expected a boolean")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if current is None:
        return raw or None
    return raw
