"""Closed-form and bisection-based equilateral constructions.

Three families are covered: permutation-invariant norms (n + 1 points), Luxemburg
Musielak-Orlicz norms (n + 1 points) and hyperplane subspaces of l_inf^n (2^(n-k) points).
`radius_lp` evaluates the l_p radius formula used by the perturbation bounds.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from scipy import optimize

from eqkit.domain.models import PointSet, point_set
from eqkit.domain.norms import (
    Hyperplane,
    LinftyHyperplane,
    MusielakOrlicz,
    NormSpec,
    Vector,
    canonicalize_hyperplane,
    musielak_orlicz,
    norm_eval,
)
from eqkit.domain.numerics import bisect_predicate, bisect_root, expand_upper, scan_first_crossing
from eqkit.domain.verify import DEFAULT_TOL, certify_equilateral
from eqkit.domain.young import YoungFunction, half_level, regularize
from eqkit.errors import (
    CapabilityError,
    ConstructionError,
    DegenerateInputError,
    InternalError,
    ParameterError,
)

logger = logging.getLogger(__name__)

PERM_RESIDUAL_RTOL = 1e-11
LEVEL_SCAN_CELLS = 64
LEVEL_SLACK = 1e-12
REGULARIZATION_INDICES = tuple(2**e for e in range(10, 31))
RADIUS_GRID = 2001
RADIUS_LOG_RANGE = (-40.0, 10.0)
RADIUS_XTOL = 1e-12


# -- permutation-invariant norms ------------------------------------------------------------


def perm_invariant_equilateral(spec: NormSpec) -> PointSet:
    """e_1, ..., e_n and t0 * (1, ..., 1), all at distance c = ||e_1 - e_2||.

    t0 solves ||(t - 1, t, ..., t)|| = c; the left end 1/n of the bracket always lies
    below the level since f(1/n) <= (n - 1) c / n by the triangle inequality.
    """
    if not spec.is_permutation_invariant:
        raise CapabilityError("construction needs a permutation-invariant norm")
    n = spec.dim
    if n < 2:
        raise ParameterError(f"construction needs dimension >= 2, got {n}")
    eye = np.eye(n)
    c = norm_eval(spec, eye[0] - eye[1])

    def gap(t: float) -> float:
        v = np.full(n, t)
        v[0] -= 1.0
        return norm_eval(spec, v) - c

    lo = 1.0 / n
    if gap(lo) + c > ((n - 1) / n) * c * (1.0 + 1e-12):
        raise InternalError(f"bracket invariant f(1/n) <= (n-1)c/n fails for {spec.family!r}")
    hi = expand_upper(lambda t: gap(t) >= 0.0, 2.0)
    t0 = bisect_root(gap, lo, hi, atol=0.0)
    residual = abs(gap(t0))
    if residual > PERM_RESIDUAL_RTOL * c:
        raise InternalError(f"root residual {residual:.3e} exceeds {PERM_RESIDUAL_RTOL} * c")
    logger.info("permutation-invariant construction: c=%.17g t0=%.17g", c, t0)
    return point_set(
        np.vstack([eye, np.full((1, n), t0)]),
        c,
        spec,
        construction="permutation-invariant",
        parameters={"t0": t0, "residual": residual},
    )


# -- Musielak-Orlicz norms ------------------------------------------------------------------


@dataclass(frozen=True)
class _Coordinate:
    """c is the half level of f, or its finiteness threshold when f stays below 1/2."""

    f: YoungFunction
    c: float
    phi: float
    half: bool

    @classmethod
    def of(cls, f: YoungFunction) -> _Coordinate:
        c, half = half_level(f)
        return cls(f=f, c=c, phi=0.5 if half else f.evaluate(c), half=half)

    def gap(self, x: float) -> float:
        """f(c - x) - f(x): decreasing from phi at 0 to -phi at c."""
        return self.f.evaluate(max(self.c - x, 0.0)) - self.f.evaluate(x)

    def level_point(self, y: float) -> float:
        if y >= self.phi:
            return 0.0
        if y < -self.phi:
            return self.c
        return bisect_predicate(lambda x: self.gap(x) <= y, 0.0, self.c)


def _level_sum(coords: Sequence[_Coordinate], y: float, skip: int | None = None) -> float:
    return sum(co.f.evaluate(co.level_point(y)) for i, co in enumerate(coords) if i != skip)


def _solve_level(func: Callable[[float], float], start: float, stop: float) -> float | None:
    """Largest level in [stop, start] where func crosses zero, scanning downward from start.

    Values within LEVEL_SLACK below zero count as a crossing.
    """
    bracket = scan_first_crossing(func, start, stop, LEVEL_SCAN_CELLS, slack=LEVEL_SLACK)
    if bracket is None:
        return None
    inside, outside = bracket
    if inside == outside or func(outside) <= 0.0:
        return outside
    return bisect_root(func, min(inside, outside), max(inside, outside))


def _level_path(coords: Sequence[_Coordinate]) -> Vector | None:
    y_lo = -min(co.phi for co in coords)

    def excess(y: float) -> float:
        return y + _level_sum(coords, y) - 1.0

    if excess(y_lo) < -LEVEL_SLACK:
        return None
    y = _solve_level(excess, 0.5, y_lo)
    if y is None:
        return None
    return np.array([co.level_point(y) for co in coords])


def _single_pin(coords: Sequence[_Coordinate]) -> Vector | None:
    thresholds = [i for i, co in enumerate(coords) if not co.half]
    if not thresholds:
        return None
    pin = min(thresholds, key=lambda i: coords[i].phi)
    if sum(co.phi for i, co in enumerate(coords) if i != pin) < 1.0:
        return None

    def excess(y: float) -> float:
        return _level_sum(coords, y, skip=pin) - 1.0

    y = _solve_level(excess, -coords[pin].phi, -0.5)
    if y is None:
        return None
    t = np.array([co.level_point(y) for co in coords])
    t[pin] = coords[pin].c
    return t


def _threshold_pin(coords: Sequence[_Coordinate]) -> Vector | None:
    if sum(not co.half for co in coords) < 2:
        return None
    return np.array([co.c for co in coords])


def _origin(coords: Sequence[_Coordinate]) -> Vector | None:
    if any(co.half for co in coords):
        return None
    return np.zeros(len(coords))


_STRATEGIES: tuple[tuple[str, Callable[[Sequence[_Coordinate]], Vector | None]], ...] = (
    ("level-path", _level_path),
    ("single-threshold-pin", _single_pin),
    ("threshold-pin", _threshold_pin),
    ("origin", _origin),
)


def _candidate(
    coords: Sequence[_Coordinate], t: Vector, norm: NormSpec, tol: float
) -> PointSet | None:
    rows = np.vstack([np.diag([co.c for co in coords]), t[None, :]])
    try:
        candidate = point_set(rows, 1.0, norm)
    except DegenerateInputError:
        return None
    cert = certify_equilateral(candidate, norm, tol)
    return candidate if cert.passed else None


def _search(
    coords: Sequence[_Coordinate], norm: NormSpec, tol: float
) -> tuple[str, Vector, PointSet] | None:
    for name, strategy in _STRATEGIES:
        t = strategy(coords)
        if t is None:
            logger.debug("strategy %s does not apply", name)
            continue
        found = _candidate(coords, t, norm, tol)
        if found is not None:
            return name, t, found
        logger.debug("strategy %s produced an uncertified candidate", name)
    return None


def _functions_of(source: NormSpec | Sequence[YoungFunction]) -> tuple[YoungFunction, ...]:
    if isinstance(source, NormSpec):
        match source.family:
            case MusielakOrlicz(functions=fs, gauge="luxemburg"):
                return fs
            case _:
                raise CapabilityError("construction needs a Luxemburg musielak_orlicz norm")
    return tuple(source)


def musielak_orlicz_equilateral(
    functions: NormSpec | Sequence[YoungFunction], *, tol: float = DEFAULT_TOL
) -> PointSet:
    """c_1 e_1, ..., c_n e_n and one point t, pairwise at Luxemburg distance 1.

    Candidates are tried on the original functions first; only when none certifies are the
    functions regularized with k = 2^10, ..., 2^30, still certifying against the original norm.
    """
    fs = _functions_of(functions)
    n = len(fs)
    if n < 3:
        raise ParameterError(f"musielak-orlicz construction needs n >= 3, got {n}")
    norm = musielak_orlicz(fs)
    coords = [_Coordinate.of(f) for f in fs]
    found = _search(coords, norm, tol)
    regularization: int | None = None
    if found is None:
        logger.warning("no direct candidate certified; falling back to regularized functions")
        for k in REGULARIZATION_INDICES:
            reg = [_Coordinate.of(regularize(f, k)) for f in fs]
            t = _level_path(reg)
            candidate = None if t is None else _candidate(reg, t, norm, tol)
            if t is not None and candidate is not None:
                found, regularization = ("regularized-level-path", t, candidate), k
                break
    if found is None:
        raise ConstructionError("no certified musielak-orlicz construction up to regularization 2^30")
    strategy, t, pts = found
    logger.info("musielak-orlicz construction via %s (regularization=%s)", strategy, regularization)
    return point_set(
        pts.points,
        1.0,
        norm,
        construction="musielak-orlicz",
        parameters={
            "strategy": strategy,
            "centers": [float(v) for v in np.diag(pts.points[:n])],
            "t": [float(v) for v in t],
            "regularization": regularization,
        },
    )


# -- hyperplane subspaces of l_inf ----------------------------------------------------------


def _plane_of(source: Hyperplane | NormSpec | Sequence[float]) -> Hyperplane:
    if isinstance(source, Hyperplane):
        return source
    if isinstance(source, NormSpec):
        match source.family:
            case LinftyHyperplane(a=a):
                return Hyperplane(a)
            case _:
                raise CapabilityError("construction needs a linfty_hyperplane norm")
    return Hyperplane(tuple(float(v) for v in source))


def valid_exact_k(canonical: Sequence[float], k: int) -> bool:
    """The k largest coefficients outweigh the rest."""
    n = len(canonical)
    return 1 <= k <= n - 1 and sum(canonical[n - k :]) >= sum(canonical[: n - k])


def minimal_exact_k(canonical: Sequence[float]) -> int:
    n = len(canonical)
    for k in range(1, n):
        if valid_exact_k(canonical, k):
            return k
    raise InternalError("no valid partition; impossible for a nonzero canonical vector")  # pragma: no cover


def valid_perturbed_k(canonical: Sequence[float], k: int) -> bool:
    """The k largest coefficients outweigh the smallest n - k - 1."""
    n = len(canonical)
    return 1 <= k <= n - 2 and sum(canonical[n - k :]) >= sum(canonical[: n - k - 1])


def minimal_perturbed_k(canonical: Sequence[float]) -> int | None:
    n = len(canonical)
    return next((k for k in range(1, n - 1) if valid_perturbed_k(canonical, k)), None)


def linfty_subspace_equilateral(
    h: Hyperplane | NormSpec | Sequence[float], k: int | None = None
) -> PointSet:
    """The sign cube (c, -h(c), ..., -h(c)), c in {+1, -1}^(n-k), in canonical coordinates.

    Points are mapped back through the recorded signs and permutation; every pair differs by 2
    in some cube coordinate while the tail differences stay within [-2, 2].
    """
    plane = _plane_of(h)
    n = plane.dim
    if n < 2:
        raise ParameterError("a hyperplane of R^1 is {0}; need n >= 2")
    canonical_plane, signs, perm = canonicalize_hyperplane(plane.a)
    a = np.array(canonical_plane.a)
    if k is None:
        k = minimal_exact_k(canonical_plane.a)
    elif not valid_exact_k(canonical_plane.a, k):
        raise ParameterError(f"k={k} is not a valid partition for coefficients {list(canonical_plane.a)}")
    m = n - k
    tail = float(a[m:].sum())
    if not tail > 0.0:
        raise InternalError("zero tail sum after canonicalization")  # pragma: no cover
    cube = np.array(list(itertools.product([1.0, -1.0], repeat=m))).reshape(-1, m)
    heights = cube @ a[:m] / tail
    canonical_points = np.hstack([cube, np.repeat(-heights[:, None], k, axis=1)])
    points = plane.from_canonical(canonical_points)
    logger.info("linfty subspace construction: n=%d k=%d points=%d", n, k, len(points))
    return point_set(
        points,
        2.0,
        NormSpec(dim=n, family=LinftyHyperplane(plane.a)),
        construction="linfty-subspace",
        parameters={
            "k": k,
            "canonical": list(canonical_plane.a),
            "signs": list(signs),
            "perm": list(perm),
        },
    )


@dataclass(frozen=True)
class SubspaceBounds:
    n: int
    exact_k: int
    exact_size: int
    exact_guarantee: int
    perturbed_k: int | None
    perturbed_size: int | None
    perturbed_guarantee: int


def subspace_lower_bounds(h: Hyperplane | NormSpec | Sequence[float]) -> SubspaceBounds:
    """Equilateral sizes guaranteed for the hyperplane and for its perturbations."""
    plane = _plane_of(h)
    n = plane.dim
    if n < 2:
        raise ParameterError("a hyperplane of R^1 is {0}; need n >= 2")
    canonical = plane.canonical
    exact_k = minimal_exact_k(canonical)
    perturbed_k = minimal_perturbed_k(canonical) if n >= 3 else None
    return SubspaceBounds(
        n=n,
        exact_k=exact_k,
        exact_size=2 ** (n - exact_k),
        exact_guarantee=2 ** (n // 2),
        perturbed_k=perturbed_k,
        perturbed_size=None if perturbed_k is None else n - perturbed_k,
        perturbed_guarantee=(n + 1) // 2,
    )


# -- l_p radius -----------------------------------------------------------------------------


def _log_ratio(log_theta: ArrayLike, p: float, n: int) -> Vector:
    """log of (1 + (1 + theta)^p) / (2 + (n - 2) theta^p), evaluated without overflow."""
    num = np.logaddexp(0.0, p * np.log1p(np.exp(log_theta)))
    den = np.logaddexp(math.log(2.0), math.log(n - 2) + p * np.asarray(log_theta))
    return np.asarray(num - den, dtype=float)


def radius_lp(p: float, n: int) -> float:
    """max over theta > 0 of ((1 + (1 + theta)^p) / (2 + (n - 2) theta^p))^(1/p)."""
    if not (math.isfinite(p) and p > 1.0):
        raise ParameterError(f"p must lie in (1, inf), got {p!r}")
    if n <= 2:
        raise ParameterError(f"n must be > 2, got {n}")
    grid = np.linspace(*RADIUS_LOG_RANGE, RADIUS_GRID)
    values = _log_ratio(grid, p, n)
    i = int(np.argmax(values))
    best = float(values[i])
    if 0 < i < RADIUS_GRID - 1:
        try:
            res = optimize.minimize_scalar(
                lambda u: -float(_log_ratio(u, p, n)),
                bracket=(float(grid[i - 1]), float(grid[i]), float(grid[i + 1])),
                method="golden",
                options={"xtol": RADIUS_XTOL},
            )
            best = max(best, -float(res.fun))
        except ValueError:
            logger.debug("golden refinement rejected the grid bracket at index %d", i)
    return math.exp(best / p)

