"""Exception hierarchy shared across the package."""


class StripefitError(Exception):
    """Base class for all errors raised by stripefit."""


# --- trajectory data model ------------------------------------------------

class ParseError(StripefitError):
    """Malformed input data; carries a 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(ParseError):
    """Input violates the canonical CSV schema."""


class DuplicateSampleError(ParseError):
    """Duplicate (trial_id, pedestrian_id, t) sample."""


class EmptyFrameError(StripefitError):
    """No pedestrian has a sample near the requested time."""


class GroupEmptyError(StripefitError):
    """One of the two groups has no positions where both are required."""


class InvalidDirectionError(StripefitError):
    """Direction vector is zero or not unit length."""


class DegenerateMotionError(StripefitError):
    """Group displacement too small to define a travel direction."""


class NoCrossingError(StripefitError):
    """The two groups' bounding boxes never overlap."""


# --- filtering ------------------------------------------------------------

class InvalidCutoffError(StripefitError):
    """Cut-off frequency outside (0, Nyquist)."""


class ShortSeriesError(StripefitError):
    """Series too short for zero-phase filtering with the chosen padding."""


# --- waveforms ------------------------------------------------------------

class InvalidWavelengthError(StripefitError):
    """Wavelength must be positive and finite."""


# --- optimizers -----------------------------------------------------------

class ConfigError(StripefitError):
    """Invalid optimizer/run configuration."""


class NonFiniteObjectiveError(StripefitError):
    """Objective returned NaN or infinity."""


class TooLargeGridError(StripefitError):
    """Grid search request exceeds the evaluation budget guard."""


# --- pattern fitting ------------------------------------------------------

class DegenerateFrameError(StripefitError):
    """Frame carries no spatial structure to fit (all points coincident)."""


# --- statistics -----------------------------------------------------------

class StatsError(StripefitError):
    """Base class for statistics errors."""


class ZeroVarianceError(StatsError):
    """Test statistic undefined because a variance term is zero."""


class SampleSizeError(StatsError):
    """Too few values for the requested test."""


class IncompleteTableError(StatsError):
    """Strategy table lacks rows required by the comparison."""


class DomainError(StatsError):
    """Argument outside the mathematical domain of the function."""


# --- synthetic data -------------------------------------------------------

class EmptyGenerationError(StripefitError):
    """Requested geometry admits no stripe within the frame extent."""
