"""Online struggle detection and anticipation toolkit (python surface).

Thin wrapper over the C++ core; see the package README for the CLI and the
full C++ API.
"""

from osda._core import (  # noqa: F401
    StreamEngine,
    binary_cross_entropy_from_logits,
    default_corpus_config,
    ece_frame,
    event_f1,
    extract_events,
    frame_ap,
    frame_cap,
    generate_corpus,
    intervals_to_frame_labels,
    masked_softmax,
    pr_auc,
    profile,
    random_baseline_cap,
    read_feature_stream,
    run_stream,
    train,
    write_feature_stream,
)

__all__ = [
    "StreamEngine",
    "binary_cross_entropy_from_logits",
    "default_corpus_config",
    "ece_frame",
    "event_f1",
    "extract_events",
    "frame_ap",
    "frame_cap",
    "generate_corpus",
    "intervals_to_frame_labels",
    "masked_softmax",
    "pr_auc",
    "profile",
    "random_baseline_cap",
    "read_feature_stream",
    "run_stream",
    "train",
    "write_feature_stream",
]
