"""Exception hierarchy.

Two families matter to callers: :class:`ValidationError` for bad input
(CLI exit code 1) and :class:`NumericalError` for computations that did
not converge or violated a numerical self-check (CLI exit code 2).
"""

from __future__ import annotations

import warnings


class AbistError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(AbistError, ValueError):
    """Input violates a documented precondition."""


class NumericalError(AbistError, ArithmeticError):
    """A numerical routine failed or a post-condition check did not hold."""


# --- input / precondition failures -------------------------------------------------


class InvalidProfile(ValidationError):
    pass


class NonDecayingTail(ValidationError):
    pass


class ZeroSpectralParameter(ValidationError):
    pass


class WrongSignRegime(ValidationError):
    pass


class EmptyInterval(ValidationError):
    pass


class DegenerateBoundary(ValidationError):
    pass


class ModeInsideCone(ValidationError):
    pass


class TooCloseToCut(ValidationError):
    pass


class TooCloseToEndpoint(ValidationError):
    pass


class PoleHit(ValidationError):
    pass


class CircleTouchesAxis(ValidationError):
    pass


class InterpolationOutOfRange(ValidationError):
    pass


class OutsideCone(ValidationError):
    pass


class DomainTooSmall(ValidationError):
    pass


# --- numerical failures ---------------------------------------------------------


class StepUnstable(NumericalError):
    pass


class S11VanishesOnAxis(NumericalError):
    pass


class WindingMismatch(NumericalError):
    pass


class NonSimpleZero(NumericalError):
    pass


class ColumnsNotProportional(NumericalError):
    pass


class SingularSystem(NumericalError):
    pass


class ResidueMismatch(NumericalError):
    pass


class InconsistentB(NumericalError):
    pass


class NonUnimodularMout(NumericalError):
    pass


class GammaOverflow(NumericalError):
    pass


class BlowUp(NumericalError):
    pass


class CompatibilityDrift(NumericalError):
    pass


class ConsistencyWarning(UserWarning):
    """A user-supplied field disagrees with the one implied by the equations."""


def warn_consistency(message: str) -> None:
    warnings.warn(message, ConsistencyWarning, stacklevel=3)
