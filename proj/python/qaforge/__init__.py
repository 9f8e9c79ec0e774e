"""Dataset construction toolkit for KBQA, MRC and IR."""

from ._qaforge import (
    Bm25Index,
    KnowledgeGraph,
    MissingArtifactError,
    ParseError,
    QaforgeError,
    UnknownIdError,
    ValidationError,
    agreement,
    exact_match,
    fold_case,
    ground_span,
    ir_metrics,
    kbqa_accuracy,
    normalize_question,
    plan,
    report_chain,
    run_pipeline,
    segment,
    stages,
    token_f1,
)

__all__ = [
    "Bm25Index",
    "KnowledgeGraph",
    "MissingArtifactError",
    "ParseError",
    "QaforgeError",
    "UnknownIdError",
    "ValidationError",
    "agreement",
    "exact_match",
    "fold_case",
    "ground_span",
    "ir_metrics",
    "kbqa_accuracy",
    "normalize_question",
    "plan",
    "report_chain",
    "run_pipeline",
    "segment",
    "stages",
    "token_f1",
]
