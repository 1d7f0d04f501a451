from typing import Optional


class RegretError(Exception):
    """Base class for all solver errors"""


class InstanceSyntaxError(RegretError):
    """The instance document could not be read"""


class InstanceValidationError(RegretError):
    """The instance document is well-formed but violates a model constraint"""

    def __init__(self, message: str, field: str, index: Optional[int] = None):
        super().__init__(message)
        self.field = field
        self.index = index


class OutOfRangeError(RegretError):
    """A point lies outside [v_1, v_n]"""


class ScenarioError(RegretError):
    """A weight vector is not an admissible scenario"""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class EmptyLineSetError(RegretError):
    """Envelope minimisation was asked for with no lines"""


class InstanceTooLargeError(RegretError):
    """Exhaustive search refused an instance above its size guard"""


class UsageError(RegretError):
    """The command line could not be parsed"""
