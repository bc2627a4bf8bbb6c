"""Text-level graph neural network for text classification."""

from ._core import (
    Error,
    Model,
    ablate,
    memory_report,
    prepare,
    sweep_p,
    tokenize,
    train,
    window_neighbors,
)

__all__ = [
    "Error",
    "Model",
    "ablate",
    "memory_report",
    "prepare",
    "sweep_p",
    "tokenize",
    "train",
    "window_neighbors",
]
