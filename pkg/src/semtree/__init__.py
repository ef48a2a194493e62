"""Retrieval by guided descent through an LLM-summarised document tree."""

from .calibration import (
    CalibrationModel,
    ScoreHistory,
    SlateRecord,
    SolverConfig,
    latent_score,
    record_slate,
    solve_mle,
)
from .scoring import Candidate, ListwiseScorer, OracleConfig, OracleScorer, ScorerError, ScorerOutput
from .traversal import SearchAborted, SearchConfig, SearchResult, replay, search
from .tree import (
    Corpus,
    Document,
    Node,
    SemanticTree,
    TreeBuilder,
    TreeFormatError,
    leaf_descendants,
    load_tree,
    save_tree,
    validate_tree,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationModel",
    "Candidate",
    "Corpus",
    "Document",
    "ListwiseScorer",
    "Node",
    "OracleConfig",
    "OracleScorer",
    "ScoreHistory",
    "ScorerError",
    "ScorerOutput",
    "SearchAborted",
    "SearchConfig",
    "SearchResult",
    "SemanticTree",
    "SlateRecord",
    "SolverConfig",
    "TreeBuilder",
    "TreeFormatError",
    "latent_score",
    "leaf_descendants",
    "load_tree",
    "record_slate",
    "replay",
    "save_tree",
    "search",
    "solve_mle",
    "validate_tree",
]
