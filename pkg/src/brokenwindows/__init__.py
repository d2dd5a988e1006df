"""Measure C code quality over git history and test broken-windows hypotheses."""

from .metrics import (
    SourceMetrics, analyze, compute_metrics, count_questionable_words,
    extract_functions,
)
from .style import StyleCounts, count_style, style_inconsistency

__version__ = "0.1.0"

__all__ = [
    "SourceMetrics", "StyleCounts", "analyze", "compute_metrics",
    "count_questionable_words", "count_style", "extract_functions",
    "style_inconsistency", "__version__",
]
