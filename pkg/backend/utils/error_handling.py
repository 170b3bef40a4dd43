"""
Error handling utilities.

This module provides the pipeline's exception hierarchy and standardized error
handling helpers for use across the apps. It centralizes error handling
patterns so that every command fails the same way and logs the same way.
"""
import functools
import logging
import traceback
from typing import Any, Callable, Dict, Optional

from django.core.management.base import CommandError

logger = logging.getLogger(__name__)

# Process exit codes of the management commands
EXIT_USAGE = 1
EXIT_FAILURE = 2


class PipelineError(Exception):
    """
    Base class of every error a pipeline stage can raise on purpose.

    Attributes:
        module: Name of the pipeline module that raised the error
        exit_code: Process exit code used when the error reaches a command
    """
    module = 'pipeline'
    exit_code = EXIT_FAILURE


class InvalidConfigError(PipelineError, ValueError):
    """A configuration document or parameter set violates its invariants."""
    module = 'cli'


# patterns

class InvalidPatternError(PipelineError, ValueError):
    """A grid is not a 16x16 binary pattern."""
    module = 'patterns'


class GenerationRetryExhausted(PipelineError):
    """Polygon generation failed to produce a connected pattern."""
    module = 'patterns'


class PlacementExhausted(PipelineError):
    """No free position was found for a basic shape."""
    module = 'patterns'


# em-solver

class InvalidSolverConfig(InvalidConfigError):
    """Solver geometry, grid or band is inconsistent."""
    module = 'em-solver'


class InvalidSpectrumError(PipelineError, ValueError):
    """A spectrum has the wrong length, grid or value range."""
    module = 'em-solver'


class SolverNonConvergence(PipelineError):
    """
    Field energy did not decay below the requested level within max_steps.

    Attributes:
        residual_db: Energy level reached, in dB relative to the peak
        steps: Number of time steps that were run
    """
    module = 'em-solver'

    def __init__(self, residual_db: float, steps: int):
        self.residual_db = residual_db
        self.steps = steps
        super().__init__(
            f"field energy at {residual_db:.1f} dB after {steps} steps"
        )

    def __reduce__(self):
        return self.__class__, (self.residual_db, self.steps)


# dataset

class CorruptHeader(PipelineError):
    """Dataset file header is unreadable or has the wrong magic."""
    module = 'dataset'


class VersionMismatch(PipelineError):
    """Dataset file was written by an unsupported format version."""
    module = 'dataset'


class TruncatedRecords(PipelineError):
    """
    Dataset file ends before all records announced in its header.

    Attributes:
        index: Index of the first incomplete record
    """
    module = 'dataset'

    def __init__(self, index: int, expected: int):
        self.index = index
        self.expected = expected
        super().__init__(f"record {index} of {expected} is truncated")

    def __reduce__(self):
        return self.__class__, (self.index, self.expected)


class InvalidParameter(InvalidConfigError):
    """A dataset argument such as a seed or a sample count is out of range."""
    module = 'dataset'


class EmptySplit(PipelineError):
    """A split would leave one side without samples."""
    module = 'dataset'


class DatasetBuildError(PipelineError):
    """
    A sample could not be produced even after its retry.

    Attributes:
        index: Index of the failing sample
    """
    module = 'dataset'

    def __init__(self, index: int, cause: Exception):
        self.index = index
        self.cause = cause
        super().__init__(f"sample {index} failed twice: {cause}")

    def __reduce__(self):
        return self.__class__, (self.index, self.cause)


# autodiff

class ShapeMismatchError(PipelineError, ValueError):
    """Operand shapes are incompatible for an operation."""
    module = 'autodiff'


class NotScalarError(PipelineError, ValueError):
    """backward() was called on a non-scalar tensor."""
    module = 'autodiff'


class MissingGradError(PipelineError):
    """An optimizer step found a parameter without a gradient."""
    module = 'autodiff'


class CorruptCheckpoint(PipelineError):
    """A checkpoint directory is unreadable or was written by another format version."""
    module = 'autodiff'


# forward-models / inverse-gan

class InvalidModelSpec(InvalidConfigError):
    """A network specification violates its structural invariants."""
    module = 'forward-models'


class TrainingDivergence(PipelineError):
    """
    A loss became NaN or infinite.

    Attributes:
        epoch: Epoch in which the divergence was detected (1-based)
    """
    module = 'forward-models'

    def __init__(self, epoch: int, what: str = 'validation MSE'):
        self.epoch = epoch
        self.what = what
        super().__init__(f"{what} is not finite at epoch {epoch}")

    def __reduce__(self):
        return self.__class__, (self.epoch, self.what)


class FrozenEvaluatorModified(PipelineError):
    """The frozen evaluation branch changed during inverse training."""
    module = 'inverse-gan'


# analytics

class GridMismatch(PipelineError):
    """Spectra or datasets sit on different frequency grids."""
    module = 'analytics'


class EmptyInputError(PipelineError, ValueError):
    """A statistic was requested over no values."""
    module = 'analytics'


def log_exception(exc: Exception, context: Optional[Dict[str, Any]] = None) -> None:
    """
    Log an exception with optional context information.

    Args:
        exc: The exception to log
        context: Optional dictionary of context information
    """
    exc_traceback = traceback.format_exc()

    if context:
        context_str = ", ".join(f"{k}={v}" for k, v in context.items())
        logger.error(f"Exception: {str(exc)}, Context: {context_str}\n{exc_traceback}")
    else:
        logger.error(f"Exception: {str(exc)}\n{exc_traceback}")


def safe_execution(default_return: Any = None, log_error: bool = True) -> Callable:
    """
    Decorator for safely executing a function and handling exceptions.

    Args:
        default_return: Value to return if an exception occurs
        log_error: Whether to log the exception

    Returns:
        Decorated function
    """
    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except Exception as e:
                if log_error:
                    context = {
                        "function": func.__name__,
                    }
                    log_exception(e, context)
                return default_return
        return wrapper
    return decorator


def command_exception_handler(func: Callable) -> Callable:
    """
    Decorator for management command handlers.

    Pipeline errors are logged and re-raised as CommandError carrying the
    error's exit code, so the process exits with 2 and a message naming the
    failing module. Anything else propagates untouched.

    Args:
        func: The command method to decorate

    Returns:
        Decorated function that maps pipeline errors to CommandError
    """
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except PipelineError as e:
            log_exception(e, {"module": e.module, "error_type": e.__class__.__name__})
            raise CommandError(
                f"{e.module}: {e.__class__.__name__}: {e}",
                returncode=e.exit_code,
            ) from e

    return wrapper
