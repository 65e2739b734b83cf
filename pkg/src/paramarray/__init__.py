"""Parametric-array wideband pulse simulation toolkit."""

from .errors import ParamArrayError
from .medium import MediumParams
from .transducer import SourceParams
from .waveform import SymbolSpec, Waveform

__all__ = ["MediumParams", "ParamArrayError", "SourceParams", "SymbolSpec", "Waveform"]
__version__ = "0.1.0"
