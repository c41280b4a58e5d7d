"""
Exception hierarchy. Library code raises these; only the CLI maps them to exit codes.
"""
from typing import Optional


class AlloframeError(Exception):
    """
    Base class of all pipeline errors.

    Attributes:
        exit_code (int): Process exit code used by the command line surface.
        stage (str): Pipeline stage that raised the error, filled in by the orchestrator.
    """
    exit_code = 1

    def __init__(self, message: str, stage: Optional[str] = None):
        super().__init__(message)
        self.stage = stage


class UsageError(AlloframeError, ValueError):
    exit_code = 2


class GroundingFailureError(AlloframeError):
    """
    No candidate survived semantic relaxation for a description.

    Attributes:
        description (str): The original description.
        trace (RelaxationTrace): Detection history of the failed search, if any.
    """
    exit_code = 3

    def __init__(self, message: str, description: str = None, trace=None, stage: Optional[str] = None):
        super().__init__(message, stage)
        self.description = description
        self.trace = trace


class ExpertTransportError(AlloframeError):
    exit_code = 4


class ExpertProtocolError(AlloframeError):
    exit_code = 4


class NotScriptedError(ExpertProtocolError):
    pass


class DegenerateFrameError(AlloframeError):
    exit_code = 5


class ExtractionError(AlloframeError):
    exit_code = 6


class AmbiguousTieError(ExtractionError):
    pass


class InvalidDepthError(AlloframeError):
    pass


class NonProjectableError(AlloframeError):
    pass


class EmptyLiftError(AlloframeError):
    exit_code = 3


class EmptyContextError(AlloframeError):
    exit_code = 2


class GenerationError(AlloframeError):
    pass


class BundleFormatError(AlloframeError):
    exit_code = 2


class MagicMismatchError(BundleFormatError):
    pass


class DimensionMismatchError(BundleFormatError):
    pass


class TruncatedFileError(BundleFormatError):
    def __init__(self, message: str, view_id: str = None, stage: Optional[str] = None):
        super().__init__(message, stage)
        self.view_id = view_id
