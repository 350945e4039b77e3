"""Evaluation metrics and protocols."""
from .evaluation import (
    DECODE_MODES,
    METRICS,
    SCENARIOS,
    EvalReport,
    ExampleRecord,
    ReversalReport,
    evaluate,
    reversal_robustness,
    similar_templates,
)
from .metrics import (
    MetricInputError,
    MeteorStats,
    align,
    bleu,
    count_chunks,
    lcs,
    meteor_from_stats,
    meteor_lite,
    meteor_stats,
    posmatch,
    posmatch_sentence,
    rouge_l,
    rouge_l_sentence,
)

__all__ = [name for name in dir() if not name.startswith("_")]
