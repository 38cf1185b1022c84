from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike

from eqkit.domain.norms import MEMBERSHIP_RTOL, Hyperplane, NormSpec, Vector
from eqkit.errors import DegenerateInputError, DimensionError, MembershipError, ParameterError

SolverMethod = Literal["damped-iteration", "quasi-newton"]


@dataclass(frozen=True, eq=False)
class PointSet:
    """m points of R^n claimed to be pairwise at `claimed_distance` under `norm`."""

    points: Vector
    claimed_distance: float
    norm: NormSpec | Hyperplane
    construction: str = ""
    parameters: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise DimensionError(f"points must form an (m, n) array, got shape {pts.shape}")
        if pts.shape[1] != self.norm.dim:
            raise DimensionError(f"points have dimension {pts.shape[1]}, norm has {self.norm.dim}")
        if not np.all(np.isfinite(pts)):
            raise DimensionError("point coordinates must be finite")
        if not self.claimed_distance > 0.0:
            raise ParameterError(f"claimed distance must be > 0, got {self.claimed_distance!r}")
        if len(np.unique(pts, axis=0)) != len(pts):
            raise DegenerateInputError("point set contains duplicate points")
        plane = self.hyperplane
        if plane is not None:
            bad = np.flatnonzero(plane.residuals(pts) > MEMBERSHIP_RTOL)
            if bad.size:
                raise MembershipError(f"point {int(bad[0])} is off the hyperplane")
        object.__setattr__(self, "points", pts)

    @property
    def hyperplane(self) -> Hyperplane | None:
        if isinstance(self.norm, Hyperplane):
            return self.norm
        return self.norm.hyperplane

    @property
    def m(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])


def point_set(
    points: ArrayLike,
    claimed_distance: float,
    norm: NormSpec | Hyperplane,
    *,
    construction: str = "",
    parameters: Mapping[str, object] | None = None,
) -> PointSet:
    return PointSet(
        points=np.asarray(points, dtype=float),
        claimed_distance=float(claimed_distance),
        norm=norm,
        construction=construction,
        parameters=dict(parameters or {}),
    )


@dataclass(frozen=True)
class DistanceSummary:
    min: float
    max: float
    mean: float


@dataclass(frozen=True)
class EquilateralCertificate:
    m: int
    distances: DistanceSummary
    claimed: float
    tolerance: float
    max_relative_deviation: float
    heuristic_flags: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return self.max_relative_deviation <= self.tolerance

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"


@dataclass(frozen=True, eq=False)
class FixedPointSolution:
    epsilon: Vector
    residual_inf: float
    iterations: int
    method: SolverMethod
    trace: tuple[float, ...] = ()


@dataclass(frozen=True)
class SymmetryReport:
    seed: int
    trials: int
    permutation_deviation: float
    sign_deviation: float
    claims_permutation_invariant: bool
    claims_unconditional: bool
    threshold: float

    @property
    def permutation_passed(self) -> bool:
        return self.permutation_deviation <= self.threshold

    @property
    def sign_passed(self) -> bool:
        return self.sign_deviation <= self.threshold

    @property
    def consistent(self) -> bool:
        """Every claimed symmetry survived sampling."""
        return (self.permutation_passed or not self.claims_permutation_invariant) and (
            self.sign_passed or not self.claims_unconditional
        )


@dataclass(frozen=True)
class MonotonicityReport:
    seed: int
    trials: int
    sign_deviation: float
    monotone_violation: float
    tolerance: float

    @property
    def unconditional(self) -> bool:
        return self.sign_deviation <= self.tolerance

    @property
    def monotone(self) -> bool:
        return self.monotone_violation <= self.tolerance

    @property
    def agree(self) -> bool:
        return self.unconditional == self.monotone


@dataclass(frozen=True)
class AxiomReport:
    seed: int
    trials: int
    homogeneity_violation: float
    triangle_violation: float
    min_norm_of_nonzero: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return (
            self.homogeneity_violation <= self.tolerance
            and self.triangle_violation <= self.tolerance
            and self.min_norm_of_nonzero > 0.0
        )


@dataclass(frozen=True)
class SandwichReport:
    """Range of ||x||_base / ||x||_target over sampled unit vectors of the target."""

    min_ratio: float
    max_ratio: float
    R: float
    samples: int
    tolerance: float = 1e-9

    @property
    def passed(self) -> bool:
        return self.min_ratio >= 1.0 - self.tolerance and self.max_ratio <= self.R + self.tolerance
