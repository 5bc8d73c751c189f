# Agents module
from .baseAgent import BaseAgent
from .pretrainAgent import PretrainAgent
from .reinforceAgent import InstanceSample, ReinforceAgent, StepDiagnostics, TrainResult, TRAINLOG_FIELDS
from .inferenceAgent import AnswerResult, CandidateRow, InferenceAgent, PathEdge, ReasonPath
from .supervisedEmbeddingAgent import SupervisedEmbeddingAgent, SupervisedEmbeddingParams
