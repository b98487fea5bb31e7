"""QA-pair knowledge-base engine.

Generates, filters, indexes, retrieves, reranks, and selectively answers
from collections of question-answer pairs.
"""

__version__ = "0.1.0"

from .errors import (
    BackendError,
    DimensionMismatchError,
    FormatError,
    MagicError,
    QAKBError,
    TruncatedFileError,
    ValidationError,
)
from .kb import (
    KnowledgeBase,
    PassageRecord,
    QAPair,
    concat_kbs,
    dedup_questions,
    filter_by_score,
    load_kb,
    load_passages,
    save_kb,
    save_passages,
)
from .textnorm import exact_match, normalize_answer

__all__ = [
    "BackendError",
    "DimensionMismatchError",
    "FormatError",
    "KnowledgeBase",
    "MagicError",
    "PassageRecord",
    "QAKBError",
    "QAPair",
    "TruncatedFileError",
    "ValidationError",
    "__version__",
    "concat_kbs",
    "dedup_questions",
    "exact_match",
    "filter_by_score",
    "load_kb",
    "load_passages",
    "normalize_answer",
    "save_kb",
    "save_passages",
]
