# Templates module
from .questionTemplates import (
    CLASS_RELATIONS,
    PATTERNS_PER_TYPE,
    QuestionTemplate,
    allTemplates,
    oneHopTemplates,
    templatesForHop,
    templateVocabulary,
    threeHopTemplates,
    twoHopTemplates,
)
