"""Visual text correction: find the word of a video description that does not
match the video and propose the word that does."""

from .estimator import VisualTextCorrector
from .exceptions import (
    CompatibilityError,
    ConfigError,
    ContractError,
    CorpusError,
    DimensionError,
    FormatError,
    LengthError,
    NumericError,
    VocabIndexError,
    VTCError,
)
from .metrics import EvalReport
from .model import ModelConfig, VTCNetwork

__version__ = "0.1.0"

__all__ = [
    "VisualTextCorrector", "EvalReport", "ModelConfig", "VTCNetwork", "VTCError", "ConfigError", "ContractError",
    "FormatError", "DimensionError", "LengthError", "VocabIndexError", "NumericError", "CorpusError",
    "CompatibilityError",
]
