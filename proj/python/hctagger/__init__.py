"""Hierarchical character tagger for short-text spelling correction.

Thin re-export of the compiled extension. The heavy lifting (alignment,
vocabulary, LM pretraining, tagger training, correction) lives in C++;
see the repository README for the CLI equivalents.
"""

from _hctagger import (
    Corrector,
    Vocabulary,
    __version__,
    apply_tags,
    compute_opcodes,
    extract_tags,
    find_longest_match,
    generate_synthetic_corpus,
    grad_check,
    pretrain_lm,
    train,
)

__all__ = [
    "Corrector",
    "Vocabulary",
    "__version__",
    "apply_tags",
    "compute_opcodes",
    "extract_tags",
    "find_longest_match",
    "generate_synthetic_corpus",
    "grad_check",
    "pretrain_lm",
    "train",
]
