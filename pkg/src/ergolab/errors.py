"""Exception hierarchy shared by all ergolab modules."""

from __future__ import annotations


class ErgolabError(Exception):
    """Base class for all ergolab errors."""


class ConfigError(ErgolabError):
    """Malformed configuration, file, or CLI input."""


class BudgetExceeded(ErgolabError):
    """A stage, level, or memory budget would be exceeded."""


# -- tower engine -----------------------------------------------------------

class DivergentMass(ErgolabError):
    """Committed spacer mass exceeds the construction's mass cap."""


class EmptyRecipe(ErgolabError):
    """Requested stage 0, or a construction without an initial tower."""


class StageOrder(ErgolabError):
    """A stage argument is out of range or refines in the wrong direction."""


class ShiftTooLarge(ErgolabError):
    """|shift| is not smaller than the evaluation tower height."""


class BadWeights(ErgolabError):
    """Weights are negative or do not sum to one exactly."""


class UnknownPreset(ErgolabError):
    """Preset name not recognised."""


# -- operator algebra -------------------------------------------------------

class DimensionMismatch(ErgolabError):
    """Operands have incompatible dimensions."""


class NotMixing(ErgolabError):
    """Operator keeps a second unit-modulus eigenvalue on zero-mean space."""


class NotErgodic(ErgolabError):
    """Fixed space of the operator is larger than the constants."""


class OverlapViolation(ErgolabError):
    """A set family violates the required pairwise disjointness."""


class BadMarginals(ErgolabError):
    """A joining table does not have uniform marginals."""


# -- cascades ---------------------------------------------------------------

class UndefinedOrbit(ErgolabError):
    """An orbit left the defined domain; carries the partial record."""

    def __init__(self, message: str, reached: int = 0, record=None):
        super().__init__(message)
        self.reached = reached
        self.record = record
