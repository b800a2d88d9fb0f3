"""Annotation-suggestion engine for educational code review.

Learns frequent embedded AST patterns per feedback annotation from the
lines reviewers placed them on, and ranks all known annotations for any
line of a new submission.
"""
from .config import EngineConfig
from .encoding import (
    UP,
    EncodedTree,
    InternTable,
    MalformedEncoding,
    Pattern,
    canonical_pattern,
    labels_of,
    validate,
)
from .ingest import (
    Submission,
    SyntaxNode,
    UnknownGrammar,
    extract_line_context,
    parse_source,
    postprocess_identifiers,
    register_grammar,
)
from .matcher import label_prefilter, pattern_matches
from .miner import PatternExplosion, embeds, mine_patterns
from .model import (
    Annotation,
    AnnotationInstance,
    AnnotationModel,
    EmptyTrainingSet,
    RankedSuggestion,
    UnknownAnnotation,
    retrain,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "AnnotationInstance",
    "AnnotationModel",
    "EmptyTrainingSet",
    "EncodedTree",
    "EngineConfig",
    "InternTable",
    "MalformedEncoding",
    "Pattern",
    "PatternExplosion",
    "RankedSuggestion",
    "Submission",
    "SyntaxNode",
    "UP",
    "UnknownAnnotation",
    "UnknownGrammar",
    "canonical_pattern",
    "embeds",
    "extract_line_context",
    "label_prefilter",
    "labels_of",
    "mine_patterns",
    "parse_source",
    "pattern_matches",
    "postprocess_identifiers",
    "register_grammar",
    "retrain",
    "train",
    "validate",
]
