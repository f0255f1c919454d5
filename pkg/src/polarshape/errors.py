"""Exception taxonomy shared across the pipeline.

The CLI maps these onto exit codes: configuration/usage problems exit 1,
data and format problems exit 2, evaluation problems exit 3.
"""


class PolarPipelineError(Exception):
    """Base class for all errors raised by this package."""


class StructuralError(PolarPipelineError):
    """Inputs violate a structural contract (shapes, channels, finiteness)."""


class ConfigError(PolarPipelineError):
    """A configuration value or key is invalid."""


class FormatError(PolarPipelineError):
    """A file does not conform to its declared on-disk format."""


class EvaluationError(PolarPipelineError):
    """Evaluation cannot proceed (e.g. empty mask or empty report list)."""
