"""Exception types raised across the package.

All of them derive from :class:`ValueError` so callers that only care about
"bad input" can catch one thing.
"""


class ParamArrayError(ValueError):
    """Base class for every error raised by paramarray."""


class InvalidMediumError(ParamArrayError):
    pass


class InvalidSourceError(ParamArrayError):
    pass


class UndersampledError(ParamArrayError):
    """Sample rate too low for the carrier or difference frequency."""


class TooShortSignalError(ParamArrayError):
    pass


class NoSolutionError(ParamArrayError):
    pass


class UnstableDesignError(ParamArrayError):
    pass


class SampleRateMismatchError(ParamArrayError):
    pass


class ZeroEnergyError(ParamArrayError):
    pass


class NoCrossingError(ParamArrayError):
    pass


class InsufficientSignalError(ParamArrayError):
    pass


class SlotMisalignmentError(ParamArrayError):
    pass


class EmptySequenceError(ParamArrayError):
    pass


class NonuniformTimestepError(ParamArrayError):
    pass


class WaveformParseError(ParamArrayError):
    pass


class ScenarioError(ParamArrayError):
    """Scenario file could not be parsed or failed validation."""


class StageError(ParamArrayError):
    """A pipeline stage failed; ``stage`` names it and ``__cause__`` holds the original."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
