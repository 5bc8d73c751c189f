# Configuration module
from .settings import (
    Config,
    ConfigError,
    EvalConfig,
    InferenceConfig,
    KgGenConfig,
    ModelConfig,
    NoiseConfig,
    QuestionGenConfig,
    TrainConfig,
)
