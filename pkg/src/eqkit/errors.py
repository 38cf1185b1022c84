from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field


@dataclass(frozen=True)
class EqkitError(Exception):
    message: str

    def __str__(self) -> str:  # pragma: no cover
        return self.message


class DomainError(EqkitError):
    """Argument outside the domain of a function (negative t, ε outside the box)."""


class NoSolutionError(EqkitError):
    """Requested level lies above every finite value of a Young function."""


class ParameterError(EqkitError):
    pass


class DimensionError(EqkitError):
    pass


class DegenerateInputError(EqkitError):
    pass


class MembershipError(EqkitError):
    """Point does not lie on the hyperplane."""


class CapabilityError(EqkitError):
    """Norm lacks a structural flag the operation requires."""


class SmoothnessBudgetError(EqkitError):
    pass


class HypothesisViolation(EqkitError):
    pass


class ParameterizationAlarm(EqkitError):
    """φ left the box [0, β]^N."""


class ConstructionError(EqkitError):
    pass


class ScaleError(EqkitError):
    pass


class InternalError(EqkitError):
    pass


@dataclass(frozen=True, eq=False)
class ParameterSelectionError(EqkitError):
    diagnostics: Mapping[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class SolverError(EqkitError):
    trace: tuple[float, ...] = ()


@dataclass(frozen=True)
class UsageError(EqkitError):
    line: int | None = None
    column: int | None = None
