"""Exceptions raised by the solvers.

Everything derives from :class:`SchedulingError`, itself a ``ValueError``, so
callers that only care about "bad input" can keep catching ``ValueError``.
"""


class SchedulingError(ValueError):
    """Base class for every error raised by ``partition_sched``."""


class InfeasibleScheduleError(SchedulingError):
    """A schedule violates machine, resource or placement constraints."""


class NotUntangleableError(SchedulingError):
    """The pair handed to ``untangle`` is not tight or shares a machine."""


class NormalizationError(SchedulingError):
    """``normalize_tight`` did not reach a fixpoint within its round cap."""


class UnsupportedInstanceError(SchedulingError):
    """An algorithm was called on an instance outside its preconditions."""


class InfeasibleNetworkError(SchedulingError):
    """The flow network cannot carry the required amount of flow."""


class FlowDecodeError(SchedulingError):
    """A flow could not be decomposed back into a schedule."""


class BudgetExceededError(SchedulingError):
    """The oracle search space is larger than the allowed budget."""

    def __init__(self, size: int, budget: int):
        self.size = size
        self.budget = budget
        super().__init__(
            f"search space of {size} exceeds the oracle budget of {budget}"
        )


class OracleExhaustedError(SchedulingError):
    """The enumeration finished without finding any feasible no-idle schedule."""


class GeneratorError(SchedulingError):
    """Invalid parameters for an instance generator."""
