"""Brute-force search for equilateral sets at desk scale.

Minimizes sum over i < j of (||x_i - x_j|| - 1)^2 from random starts by coordinate descent
with a halving step, then polishes with unconstrained least squares. A miss says nothing
about nonexistence.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from eqkit.domain.models import EquilateralCertificate, PointSet, point_set
from eqkit.domain.norms import NormSpec, Vector
from eqkit.domain.verify import certify_equilateral, pairwise_distances
from eqkit.errors import DegenerateInputError, DimensionError, MembershipError, ParameterError, ScaleError

logger = logging.getLogger(__name__)

DESK_SCALE = 64
RESIDUAL_THRESHOLD = 1e-16
ORACLE_TOL = 1e-7
INITIAL_STEP = 0.25
MIN_STEP = 1e-12


@dataclass(frozen=True, eq=False)
class SearchConfig:
    norm: NormSpec
    m: int
    restarts: int = 32
    max_sweeps: int = 10_000
    threshold: float = RESIDUAL_THRESHOLD
    warm_start: Vector | None = None
    warm_distance: float = 1.0
    threads: int = 1

    def __post_init__(self) -> None:
        if self.m < 2:
            raise ParameterError(f"search needs m >= 2, got {self.m}")
        if self.restarts < 1:
            raise ParameterError(f"restarts must be >= 1, got {self.restarts}")
        if self.threads < 1:
            raise ParameterError(f"threads must be >= 1, got {self.threads}")
        if self.norm.dim * self.m > DESK_SCALE:
            raise ScaleError(f"n*m = {self.norm.dim * self.m} exceeds the desk scale {DESK_SCALE}")
        if not self.warm_distance > 0.0:
            raise ParameterError(f"warm distance must be > 0, got {self.warm_distance!r}")


@dataclass(frozen=True, eq=False)
class SearchResult:
    found: bool
    residual: float
    restarts: int
    seed: int
    best_restart: int
    points: PointSet | None = None
    certificate: EquilateralCertificate | None = None

    @property
    def verdict(self) -> str:
        return "found" if self.found else "inconclusive"


def _basis(norm: NormSpec) -> Vector:
    """Orthonormal rows spanning the space the points live in."""
    h = norm.hyperplane
    if h is None:
        return np.eye(norm.dim)
    return np.asarray(linalg.null_space(np.array([h.a])).T, dtype=float)


class _Objective:
    def __init__(self, norm: NormSpec, m: int, basis: Vector) -> None:
        self.norm = norm
        self.m = m
        self.basis = basis

    def points(self, z: Vector) -> Vector:
        return np.asarray(z.reshape(self.m, -1) @ self.basis, dtype=float)

    def residuals(self, z: Vector) -> Vector:
        return pairwise_distances(self.points(z), self.norm) - 1.0

    def __call__(self, z: Vector) -> float:
        r = self.residuals(z)
        return float(r @ r)


def _descend(objective: _Objective, z0: Vector, max_sweeps: int, threshold: float) -> tuple[Vector, float]:
    z = z0.copy()
    best = objective(z)
    step = INITIAL_STEP
    for _ in range(max_sweeps):
        if best < threshold or step < MIN_STEP:
            break
        improved = False
        for k in range(z.size):
            for sign in (1.0, -1.0):
                z[k] += sign * step
                value = objective(z)
                if value < best:
                    best, improved = value, True
                    break
                z[k] -= sign * step
        if not improved:
            step *= 0.5
    return z, best


def _polish(objective: _Objective, z: Vector, value: float) -> tuple[Vector, float]:
    fit = optimize.least_squares(
        objective.residuals, z, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15
    )
    polished = objective(fit.x)
    if polished < value:
        return fit.x, polished
    return z, value


def _run(objective: _Objective, z0: Vector, cfg: SearchConfig) -> tuple[Vector, float]:
    value = objective(z0)
    if value < cfg.threshold:
        return z0, value
    z, value = _descend(objective, z0, cfg.max_sweeps, cfg.threshold)
    if value >= cfg.threshold:
        z, value = _polish(objective, z, value)
    return z, value


def _warm_start(cfg: SearchConfig, basis: Vector) -> Vector:
    pts = np.asarray(cfg.warm_start, dtype=float)
    if pts.shape != (cfg.m, cfg.norm.dim):
        raise DimensionError(f"warm start must have shape ({cfg.m}, {cfg.norm.dim}), got {pts.shape}")
    return np.asarray((pts / cfg.warm_distance) @ basis.T, dtype=float).ravel()


def search_equilateral(cfg: SearchConfig, seed: int = 0) -> SearchResult:
    """Best of `cfg.restarts` seeded local searches (plus the warm start, if any).

    Restarts draw from independent child seeds, so the result does not depend on `threads`.
    """
    basis = _basis(cfg.norm)
    objective = _Objective(cfg.norm, cfg.m, basis)
    children = np.random.SeedSequence(seed).spawn(cfg.restarts)
    starts = [
        np.random.default_rng(child).uniform(-1.0, 1.0, size=cfg.m * basis.shape[0])
        for child in children
    ]
    if cfg.warm_start is not None:
        starts.insert(0, _warm_start(cfg, basis))

    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        outcomes = list(pool.map(lambda z0: _run(objective, z0, cfg), starts))
    best = min(range(len(outcomes)), key=lambda i: (outcomes[i][1], i))
    z, residual = outcomes[best]
    logger.debug("oracle best restart %d residual %.3e", best, residual)

    found = residual < cfg.threshold
    points: PointSet | None = None
    cert: EquilateralCertificate | None = None
    if found:
        try:
            points = point_set(objective.points(z), 1.0, cfg.norm, construction="oracle")
            cert = certify_equilateral(points, tol=ORACLE_TOL)
        except (DegenerateInputError, MembershipError):
            found = False
            points = None
        else:
            found = cert.passed
            if not found:
                logger.warning(
                    "oracle: residual %.3e is below threshold but the certificate fails at %.0e",
                    residual,
                    ORACLE_TOL,
                )
    if not found:
        logger.info("oracle: no equilateral %d-set found (inconclusive), best residual %.3e", cfg.m, residual)
    return SearchResult(
        found=found,
        residual=residual,
        restarts=len(starts),
        seed=seed,
        best_restart=best,
        points=points,
        certificate=cert,
    )

