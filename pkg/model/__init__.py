# Parameters, kernels, gradients and objectives of the reasoning network
from .params import (
    FREE,
    NAME_BOW,
    NameIndex,
    PosteriorParams,
    ReasoningParams,
    RecognitionParams,
    ShapeError,
    VrnParams,
    initParams,
)
from .context import ModelContext
from .kernels import (
    Distribution,
    NodeEmbeddings,
    answerDistribution,
    embedQuestion,
    entityWeight,
    forwardPropagate,
    posteriorDistribution,
    topicDistribution,
)
from .gradients import GradientError, GradientSet, LossSpec, applyGradients, gradients
from .baselineNet import BaselineNet
from .signalState import LearningSignalState, normalizeSignal
from .objectives import AnswerUnreachableError, elbo, elboFromPosterior, exactPosterior, learningSignal, marginalLoglik
