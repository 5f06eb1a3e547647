"""Interactive specialization of cross-lingual word embeddings.

Rank task-salient keywords with classifier loss gradients, collect
accept/reject feedback on their nearest neighbors, refine the embedding
space against that feedback, retrain, and measure the difference.
"""

from .classifier import ConvTextClassifier
from .embeddings import EmbeddingSpace, Vocabulary, WordRef, cosine
from .errors import (
    FormatError,
    NotFoundError,
    PreconditionError,
    SessionClosedError,
    WordbenchError,
)
from .refine import EmbeddingRefiner, FeedbackSet, RefineConfig, refine
from .salience import KeywordRanking, SalienceTable, global_salience, select_keywords
from .sampling import augment_training_set, entropy, uncertainty_sample
from .stats import TTestResult, single_sample_ttest, student_t_cdf
from .synth import OracleLexicon, SyntheticTaskSpec, generate_task
from .workspace import Workspace

__version__ = "0.1.0"

__all__ = [
    "ConvTextClassifier",
    "EmbeddingRefiner",
    "EmbeddingSpace",
    "FeedbackSet",
    "FormatError",
    "KeywordRanking",
    "NotFoundError",
    "OracleLexicon",
    "PreconditionError",
    "RefineConfig",
    "SalienceTable",
    "SessionClosedError",
    "SyntheticTaskSpec",
    "TTestResult",
    "Vocabulary",
    "Workspace",
    "WordbenchError",
    "WordRef",
    "augment_training_set",
    "cosine",
    "entropy",
    "generate_task",
    "global_salience",
    "refine",
    "select_keywords",
    "single_sample_ttest",
    "student_t_cdf",
    "uncertainty_sample",
    "__version__",
]
