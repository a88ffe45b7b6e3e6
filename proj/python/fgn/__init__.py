"""Glyph-aware Chinese NER: CGS-CNN glyph encoder, sliding-window fusion and a BiLSTM-CRF tagger."""

from ._fgn import (
    FgnError,
    Model,
    crf_log_likelihood,
    decode_entities,
    gradcheck,
    log_partition,
    train,
    validate_window,
    viterbi_decode,
    write_synthetic_corpus,
)

__all__ = [
    "FgnError",
    "Model",
    "crf_log_likelihood",
    "decode_entities",
    "gradcheck",
    "log_partition",
    "train",
    "validate_window",
    "viterbi_decode",
    "write_synthetic_corpus",
]
