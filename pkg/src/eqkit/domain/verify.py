"""Certificates and sampled property checks.

Everything here is evidence, not proof: symmetry and monotonicity checks sample with a
recorded seed so a report can be replayed.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from eqkit.domain.models import (
    AxiomReport,
    DistanceSummary,
    EquilateralCertificate,
    MonotonicityReport,
    PointSet,
    SymmetryReport,
)
from eqkit.domain.norms import (
    Hyperplane,
    LinftyHyperplane,
    NormSpec,
    Vector,
    norm_eval_many,
    sample_directions,
)
from eqkit.errors import DimensionError, MembershipError, ParameterError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
EXACT_TOL = 1e-12
SYMMETRY_THRESHOLD = 1e-11
MONOTONE_TOL = 1e-10


def _as_spec(norm: NormSpec | Hyperplane) -> NormSpec:
    if isinstance(norm, Hyperplane):
        return NormSpec(dim=norm.dim, family=LinftyHyperplane(norm.a))
    return norm


def pairwise_distances(points: Vector, norm: NormSpec | Hyperplane) -> Vector:
    """Flattened d(x_i, x_j) for i < j, in the order of itertools.combinations."""
    spec = _as_spec(norm)
    pts = np.asarray(points, dtype=float)
    chunks = [norm_eval_many(spec, pts[i + 1 :] - pts[i]) for i in range(len(pts) - 1)]
    return np.concatenate(chunks) if chunks else np.zeros(0)


def certify_equilateral(
    points: PointSet,
    norm: NormSpec | Hyperplane | None = None,
    tol: float = DEFAULT_TOL,
    *,
    heuristic_flags: Sequence[str] = (),
) -> EquilateralCertificate:
    """Evaluate all m(m-1)/2 distances; pass iff max |d_ij - claimed| <= tol * claimed."""
    target = points.norm if norm is None else norm
    if points.m < 2:
        raise ParameterError("certification needs at least two points")
    if target.dim != points.dim:
        raise DimensionError(f"points have dimension {points.dim}, norm has {target.dim}")
    plane = target if isinstance(target, Hyperplane) else target.hyperplane
    if plane is not None:
        bad = np.flatnonzero(plane.residuals(points.points) > 1e-9)
        if bad.size:
            raise MembershipError(f"point {int(bad[0])} is off the hyperplane")

    d = pairwise_distances(points.points, target)
    claimed = points.claimed_distance
    deviation = float(np.max(np.abs(d - claimed))) / claimed
    cert = EquilateralCertificate(
        m=points.m,
        distances=DistanceSummary(min=float(d.min()), max=float(d.max()), mean=float(d.mean())),
        claimed=claimed,
        tolerance=tol,
        max_relative_deviation=deviation,
        heuristic_flags=tuple(heuristic_flags),
    )
    logger.debug("certificate m=%d deviation=%.3e verdict=%s", cert.m, deviation, cert.verdict)
    return cert


def _relative_gap(spec: NormSpec, xs: Vector, ys: Vector) -> float:
    """max | ||x|| - ||y|| | / ||x|| over rows; inf when a transformed row leaves the subspace."""
    try:
        nx = norm_eval_many(spec, xs)
        ny = norm_eval_many(spec, ys)
    except MembershipError:
        return float("inf")
    return float(np.max(np.abs(nx - ny) / nx))


def _random_signs(rng: np.random.Generator, shape: tuple[int, int]) -> Vector:
    return rng.choice(np.array([-1.0, 1.0]), size=shape)


def check_symmetries(spec: NormSpec, trials: int = 100, *, seed: int = 0) -> SymmetryReport:
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(seed)
    xs = rng.standard_normal((trials, spec.dim))
    h = spec.hyperplane
    if h is not None:
        xs = h.project(xs)
    perms = np.array([rng.permutation(spec.dim) for _ in range(trials)])
    permuted = np.take_along_axis(xs, perms, axis=1)
    flipped = xs * _random_signs(rng, xs.shape)
    report = SymmetryReport(
        seed=seed,
        trials=trials,
        permutation_deviation=_relative_gap(spec, xs, permuted),
        sign_deviation=_relative_gap(spec, xs, flipped),
        claims_permutation_invariant=spec.is_permutation_invariant,
        claims_unconditional=spec.is_unconditional,
        threshold=SYMMETRY_THRESHOLD,
    )
    if not report.consistent:
        logger.warning("sampled symmetries contradict the declared flags of %r", spec.family)
    return report


def check_monotone_iff_unconditional(spec: NormSpec, trials: int = 100, *, seed: int = 0) -> MonotonicityReport:
    """Sample sign symmetry and coordinate-wise monotonicity independently.

    Monotonicity is checked with shrink pairs (|x_i| = lam_i |y_i|, random signs) and with
    directed sign flips: y and its flip have equal moduli, so whichever is larger violates
    monotonicity against the other.
    """
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(seed)
    n = spec.dim
    ys = rng.standard_normal((trials, n))
    h = spec.hyperplane
    if h is not None:
        ys = h.project(ys)
    ys = ys / norm_eval_many(spec, ys)[:, None]
    flipped = ys * _random_signs(rng, ys.shape)
    shrunk = ys * rng.uniform(0.0, 1.0, size=ys.shape) * _random_signs(rng, ys.shape)

    sign_dev = _relative_gap(spec, ys, flipped)
    try:
        ny = norm_eval_many(spec, ys)
        violation = max(
            float(np.max(np.abs(norm_eval_many(spec, flipped) - ny))),
            float(np.max(norm_eval_many(spec, shrunk) - ny)),
            0.0,
        )
    except MembershipError:
        violation = float("inf")
    report = MonotonicityReport(
        seed=seed,
        trials=trials,
        sign_deviation=sign_dev,
        monotone_violation=violation,
        tolerance=MONOTONE_TOL,
    )
    if not report.agree:
        logger.warning("monotonicity and 1-unconditionality disagree on the sampled points")
    return report


def check_norm_axioms(
    spec: NormSpec, trials: int = 1000, *, seed: int = 0, tol: float = MONOTONE_TOL
) -> AxiomReport:
    """Largest sampled violations of homogeneity and the triangle inequality (both relative)."""
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(seed)
    xs = sample_directions(spec, rng, trials)
    ys = sample_directions(spec, rng, trials)[::-1]
    m = min(len(xs), len(ys))
    xs = xs[:m] * rng.uniform(0.1, 10.0, size=(m, 1))
    ys = ys[:m] * rng.uniform(0.1, 10.0, size=(m, 1))
    lam = rng.uniform(-3.0, 3.0, size=(m, 1))
    nx = norm_eval_many(spec, xs)
    ny = norm_eval_many(spec, ys)
    homog = np.abs(norm_eval_many(spec, lam * xs) - np.abs(lam[:, 0]) * nx) / nx
    tri = (norm_eval_many(spec, xs + ys) - nx - ny) / (nx + ny)
    return AxiomReport(
        seed=seed,
        trials=m,
        homogeneity_violation=float(np.max(homog)),
        triangle_violation=max(float(np.max(tri)), 0.0),
        min_norm_of_nonzero=float(np.min(nx / np.linalg.norm(xs, axis=1))),
        tolerance=tol,
    )
