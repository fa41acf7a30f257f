"""Domain-adversarial graph attention pipeline for multichannel EEG.

Layering, bottom to top: a float64 reverse-mode autodiff core (`tensor`,
`ops`, `optim`, `gradcheck`), channel-graph construction (`graph`,
`layouts`), differential-entropy features (`features`), the model
(`model`), losses and evaluation protocols (`losses`, `training`), and
dataset/CLI plumbing (`synthetic`, `datasets`, `config`, `checkpoint`,
`reports`, `cli`).
"""

from .tensor import Tape, Tensor, backward
from .errors import (
    ConfigError,
    ContractError,
    DagamError,
    DataError,
    DegenerateInputError,
    DimensionError,
    GradCheckError,
    GraphError,
    LayoutError,
    LoadError,
    TrainingDivergenceError,
)

__version__ = "0.1.0"

__all__ = [
    "Tape",
    "Tensor",
    "backward",
    "ConfigError",
    "ContractError",
    "DagamError",
    "DataError",
    "DegenerateInputError",
    "DimensionError",
    "GradCheckError",
    "GraphError",
    "LayoutError",
    "LoadError",
    "TrainingDivergenceError",
    "__version__",
]
