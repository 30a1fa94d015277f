"""Exception hierarchy shared by every module of the package."""


class PeakShaveError(Exception):
    """Base class for all package errors."""


class InvalidInstance(PeakShaveError, ValueError):
    """A problem instance violates one of its invariants.

    The offending field name is kept on ``field``.
    """

    def __init__(self, field, message=None):
        self.field = field
        super().__init__(message or f"invalid instance field: {field}")


class LengthMismatch(PeakShaveError, ValueError):
    pass


class NumericalFailure(PeakShaveError, ArithmeticError):
    """Raised when a pivot falls below the solver's pivot tolerance."""


class Infeasible(PeakShaveError):
    pass


class DenominatorNonPositive(PeakShaveError, ArithmeticError):
    pass


class CapacityViolation(PeakShaveError):
    """An online policy tried to discharge more than the storage holds."""

    def __init__(self, slot, used, capacity):
        self.slot = slot
        self.used = used
        self.capacity = capacity
        super().__init__(
            f"slot {slot}: cumulative discharge {used:.9g} exceeds capacity {capacity:.9g}"
        )


class DegenerateRatio(PeakShaveError, ArithmeticError):
    pass


class MissingParameter(PeakShaveError, ValueError):
    pass


class ParseError(PeakShaveError, ValueError):
    def __init__(self, row, message):
        self.row = row
        super().__init__(f"row {row}: {message}")


class ShortDay(PeakShaveError):
    """A calendar day does not hold enough slots for one episode."""

    def __init__(self, day, n_slots, needed):
        self.day = day
        self.n_slots = n_slots
        self.needed = needed
        super().__init__(f"{day}: {n_slots} slots in window, {needed} needed")


class IoError(PeakShaveError, OSError):
    """A report or trace file could not be written."""


class PolicyRunError(PeakShaveError):
    """A policy failed on one episode; the original error is ``__cause__``."""

    def __init__(self, policy, episode, cause):
        self.policy = policy
        self.episode = episode
        self.cause = cause
        super().__init__(f"{policy} on episode {episode}: {cause}")
