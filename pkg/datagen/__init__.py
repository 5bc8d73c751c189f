# Synthetic dataset generation module
from .qaItem import DatasetSplit, QAItem
from .entityLabeler import LabelResult, NameMatcher, labelEntities, parseBrackets
from .kgGenerator import RELATIONS, TemplateCoverageError, generateKg
from .questionGenerator import executePath, generateQuestions, labelCount, limitLabels
from .noise import SYNONYMS, applyNoise
from .splitter import splitDataset
from .qaFiles import qaFileName, readQaFile, typesFileName, writeQaFile, writeTypesFile
