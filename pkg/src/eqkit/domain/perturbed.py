"""Fixed-point machinery for equilateral sets in spaces close to a structured one.

A structured space X (smooth symmetric, Luxemburg Musielak-Orlicz with f'(0) = 0, or a
hyperplane of l_inf) carries explicit point maps p_j(eps). For a nearby norm Y with
||x||_Y <= ||x||_X <= R ||x||_Y, the map

    phi_ij(eps) = 1 + eps_ij - ||p_i(eps) - p_j(eps)||_Y

sends the box [0, beta]^N into itself, and any fixed point gives points at pairwise
Y-distance 1. `build_problem` normalizes X and positions Y, `solve_fixed_point` finds eps.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike
from scipy import optimize

from eqkit.domain.construct import minimal_perturbed_k, valid_perturbed_k
from eqkit.domain.models import (
    EquilateralCertificate,
    FixedPointSolution,
    PointSet,
    SandwichReport,
    point_set,
)
from eqkit.domain.norms import (
    Hyperplane,
    LinftyHyperplane,
    MusielakOrlicz,
    NormSpec,
    Vector,
    musielak_orlicz,
    norm_eval,
    norm_eval_many,
    sample_directions,
    scaled,
)
from eqkit.domain.numerics import INF
from eqkit.domain.smoothness import MIN_BUDGET, find_eps0, supporting_functional_symmetric
from eqkit.domain.verify import DEFAULT_TOL, certify_equilateral
from eqkit.domain.young import YoungFunction, dilate, half_level, one_sided_derivative
from eqkit.errors import (
    CapabilityError,
    DimensionError,
    DomainError,
    HypothesisViolation,
    ParameterError,
    ParameterizationAlarm,
    ParameterSelectionError,
    SolverError,
)

logger = logging.getLogger(__name__)

Variant = Literal["symmetric", "orlicz", "subspace"]
VARIANTS: tuple[Variant, ...] = ("symmetric", "orlicz", "subspace")

BOX_SLACK = 1e-12
FIXED_POINT_TOL = 1e-10
MAX_ITERATIONS = 100_000
DAMPING = 0.5
STAGNATION_WINDOW = 500
STAGNATION_RATIO = 0.9
SANDWICH_SAMPLES = 1000
SANDWICH_TOL = 1e-9
MAX_HALVINGS = 60
SUBSPACE_R = 2.0


# -- parameters ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymmetricParameters:
    scale: float
    c: float
    eps0: float
    epsilon: float
    gamma: float
    beta: float
    R_lower: float
    heuristic_flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class OrliczParameters:
    centers: tuple[float, ...]
    m: int
    K: float
    epsilon: float
    gammas: tuple[float, ...]
    beta: float
    R_lower: float
    heuristic_flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class SubspaceParameters:
    k: int
    m: int
    canonical: tuple[float, ...]
    signs: tuple[int, ...]
    perm: tuple[int, ...]
    b: tuple[float, ...]
    beta: float = 1.0
    R: float = SUBSPACE_R
    heuristic_flags: tuple[str, ...] = ()


def unit_coordinate_scale(base: NormSpec) -> float:
    """1 / ||e_1||, the factor that puts the unit vectors of a symmetric norm on the sphere."""
    e1 = np.zeros(base.dim)
    e1[0] = 1.0
    return 1.0 / norm_eval(base, e1)


def select_parameters_symmetric(
    base: NormSpec,
    budget: int = MIN_BUDGET,
    *,
    seed: int = 0,
    eps0: float | None = None,
) -> SymmetricParameters:
    """gamma = c - eps, beta = 3 eps with eps = eps0 / (3n), checked by direct evaluation.

    `base` is rescaled so ||e_i|| = 1 first; the returned `scale` records that factor.
    """
    n = base.dim
    scale = unit_coordinate_scale(base)
    work = base if scale == 1.0 else scaled(base, scale)
    c, _ = supporting_functional_symmetric(work)
    flags: tuple[str, ...] = ()
    if eps0 is None:
        eps0 = find_eps0(work, n, budget, seed=seed)
        flags = ("rho-estimate-only",)
    elif not (math.isfinite(eps0) and 0.0 < eps0 <= 1.0):
        raise ParameterError(f"eps0 must lie in (0, 1], got {eps0!r}")
    eps = eps0 / (3.0 * n)
    gamma = c - eps
    beta = 3.0 * eps

    corner = np.full(n, beta)
    corner[:2] = gamma
    corner_norm = norm_eval(work, corner)
    edge = np.zeros(n)
    edge[:2] = (gamma + beta, gamma)
    r_lower = norm_eval(work, edge)
    floor = 1.0 + eps0 / (6.0 * n)
    diagnostics = {
        "eps0": eps0,
        "epsilon": eps,
        "c": c,
        "corner_norm": corner_norm,
        "R_lower": r_lower,
        "R_floor": floor,
    }
    if corner_norm > 1.0 + BOX_SLACK:
        raise ParameterSelectionError(
            f"||(gamma, gamma, beta, ...)|| = {corner_norm!r} exceeds 1; shrink eps0", diagnostics
        )
    if r_lower < floor - BOX_SLACK:
        raise ParameterSelectionError(
            f"R_lower = {r_lower!r} falls below 1 + eps0/(6n) = {floor!r}; shrink eps0", diagnostics
        )
    logger.info("symmetric parameters: eps0=%g eps=%.6g gamma=%.12g R_lower=%.12g", eps0, eps, gamma, r_lower)
    return SymmetricParameters(
        scale=scale,
        c=c,
        eps0=eps0,
        epsilon=eps,
        gamma=gamma,
        beta=beta,
        R_lower=r_lower,
        heuristic_flags=flags,
    )


def sort_thresholds_first(functions: Sequence[YoungFunction]) -> tuple[tuple[YoungFunction, ...], tuple[int, ...]]:
    """Stable reorder putting the functions that never reach 1/2 first; perm[k] is the old index."""
    halves = [half_level(f)[1] for f in functions]
    perm = tuple(sorted(range(len(functions)), key=lambda i: halves[i]))
    return tuple(functions[i] for i in perm), perm


def _sum_at(functions: Sequence[YoungFunction], t: float, skip: tuple[int, ...] = ()) -> float:
    total = 0.0
    for i, f in enumerate(functions):
        if i in skip:
            continue
        v = f.evaluate(t)
        if math.isinf(v):
            return INF
        total += v
    return total


def _orlicz_system_holds(
    fs: Sequence[YoungFunction], gammas: Sequence[float], beta: float
) -> bool:
    """Both inequality families for every pair i < j."""
    for i, j in itertools.combinations(range(len(fs)), 2):
        if not fs[i].evaluate(gammas[i] + beta) + fs[j].evaluate(gammas[j]) > 1.0:
            return False
        rest = _sum_at(fs, beta, skip=(i, j))
        if fs[i].evaluate(gammas[i]) + fs[j].evaluate(gammas[j]) + rest > 1.0:
            return False
    return True


def select_parameters_orlicz(functions: Sequence[YoungFunction]) -> OrliczParameters:
    """gamma_i = c_i - eps, beta = (K + 1) eps with eps halved from 1 until the system holds.

    The functions must vanish to first order at 0 and list the threshold type (never
    reaching 1/2) first; `sort_thresholds_first` produces that order.
    """
    fs = tuple(functions)
    n = len(fs)
    if n < 2:
        raise ParameterError(f"orlicz perturbation needs n >= 2, got {n}")
    for i, f in enumerate(fs):
        d0 = one_sided_derivative(f, 0.0, "right")
        if d0 != 0.0:
            raise HypothesisViolation(f"f_{i}'(0+) = {d0!r}; the perturbation needs f'(0) = 0")
    levels = [half_level(f) for f in fs]
    halves = [h for _, h in levels]
    m = sum(not h for h in halves)
    if any(halves[:m]):
        raise ParameterError("threshold-type functions must come first; use sort_thresholds_first")
    centers = tuple(float(c) for c, _ in levels)
    phis = [f.evaluate(c) for f, c in zip(fs, centers)]
    left = [one_sided_derivative(f, c, "left") for f, c in zip(fs, centers)]
    right = [one_sided_derivative(f, c, "right") for f, c in zip(fs, centers)]

    regular_pairs = list(itertools.combinations(range(m, n), 2))
    ratio = max((left[j] / right[i] for i, j in regular_pairs), default=0.0)
    K = 2.0 * ratio if ratio > 0.0 else 1.0
    slope_floor = min((left[i] + left[j] for i, j in regular_pairs), default=INF)
    room = min(
        (1.0 - phis[i] - phis[j] for i in range(m) for j in range(i + 1, n)),
        default=INF,
    )
    flags: tuple[str, ...] = ("all-threshold-coordinates",) if m == n else ()

    eps = 1.0
    for _ in range(MAX_HALVINGS):
        gammas = tuple(c - eps for c in centers)
        beta = (K + 1.0) * eps
        if min(gammas) > 0.0:
            total = _sum_at(fs, beta)
            if (
                total / eps <= slope_floor
                and total <= room
                and _orlicz_system_holds(fs, gammas, beta)
            ):
                break
        eps *= 0.5
    else:
        raise ParameterSelectionError(
            f"no eps >= 2^-{MAX_HALVINGS} satisfies the orlicz inequalities",
            {"K": K, "m": m, "centers": list(centers), "slope_floor": slope_floor, "room": room},
        )

    norm = musielak_orlicz(fs)
    r_lower = INF
    for i, j in itertools.combinations(range(n), 2):
        v = np.zeros(n)
        v[i] = centers[i] + K * eps
        v[j] = centers[j] - eps
        r_lower = min(r_lower, norm_eval(norm, v))
    logger.info("orlicz parameters: m=%d K=%.6g eps=%.6g R_lower=%.12g", m, K, eps, r_lower)
    return OrliczParameters(
        centers=centers,
        m=m,
        K=K,
        epsilon=eps,
        gammas=gammas,
        beta=beta,
        R_lower=r_lower,
        heuristic_flags=flags,
    )


def _plane_of(base: NormSpec | Hyperplane) -> Hyperplane:
    if isinstance(base, Hyperplane):
        return base
    match base.family:
        case LinftyHyperplane(a=a):
            return Hyperplane(a)
        case _:
            raise CapabilityError("subspace perturbation needs a linfty_hyperplane base")


def select_parameters_subspace(h: NormSpec | Hyperplane, k: int | None = None) -> SubspaceParameters:
    """n - k points with the last canonical cube slot carrying b_j = a_j / a_(n-k)."""
    plane = _plane_of(h)
    n = plane.dim
    if n < 3:
        raise ParameterError(f"subspace perturbation needs n >= 3, got {n}")
    a = plane.canonical
    if k is None:
        k = minimal_perturbed_k(a)
        if k is None:
            raise ParameterError(f"no valid k in [1, {n - 2}] for coefficients {list(a)}")
    elif not valid_perturbed_k(a, k):
        raise ParameterError(f"k={k} is not a valid partition for coefficients {list(a)}")
    m = n - k
    pivot = a[m - 1]
    b = tuple(a[j] / pivot if pivot > 0.0 else 0.0 for j in range(m - 1))
    return SubspaceParameters(k=k, m=m, canonical=a, signs=plane.signs, perm=plane.perm, b=b)


# -- problem --------------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PerturbationProblem:
    """Working-coordinate data; `to_original` maps working points back (x = Q y)."""

    variant: Variant
    base: NormSpec
    target: NormSpec
    original_target: NormSpec
    box_beta: float
    gammas: tuple[float, ...]
    R: float
    to_original: Vector
    target_scale: float
    subspace: SubspaceParameters | None = None
    heuristic_flags: tuple[str, ...] = ()
    metadata: Mapping[str, object] = field(default_factory=dict)

    @property
    def points(self) -> int:
        return len(self.gammas)

    @property
    def N(self) -> int:
        return self.points * (self.points - 1) // 2

    @cached_property
    def pairs(self) -> tuple[Vector, Vector]:
        idx = np.array(list(itertools.combinations(range(self.points), 2)), dtype=int).reshape(-1, 2)
        return idx[:, 0], idx[:, 1]

    @cached_property
    def pair_index(self) -> np.ndarray:
        """Symmetric matrix of positions of (i, j) in the flattened eps vector."""
        m = self.points
        out = np.full((m, m), -1, dtype=int)
        i, j = self.pairs
        out[i, j] = np.arange(len(i))
        out[j, i] = out[i, j]
        return out


def _box(problem: PerturbationProblem, eps: ArrayLike) -> Vector:
    e = np.asarray(eps, dtype=float)
    if e.shape != (problem.N,):
        raise DimensionError(f"eps must have {problem.N} entries, got shape {e.shape}")
    if not np.all(np.isfinite(e)) or e.min(initial=0.0) < -BOX_SLACK or e.max(initial=0.0) > problem.box_beta + BOX_SLACK:
        raise DomainError(f"eps must lie in the box [0, {problem.box_beta!r}]^{problem.N}")
    return e


def point_map(problem: PerturbationProblem, eps: ArrayLike) -> Vector:
    """p_1(eps), ..., p_m(eps) as rows, in working coordinates."""
    e = _box(problem, eps)
    m = problem.points
    n = problem.base.dim
    idx = problem.pair_index
    pts = np.zeros((m, n))
    for j in range(m):
        pts[j, :j] = e[idx[:j, j]]
    sub = problem.subspace
    if sub is None:
        pts[np.arange(m), np.arange(m)] = -np.array(problem.gammas)
        return pts
    a = np.array(sub.canonical)
    tail = float(a[m:].sum())
    for j in range(m):
        if j < m - 1:
            pts[j, j] = -1.0
            pts[j, m - 1] = sub.b[j]
        pts[j, m:] = -float(a[:j] @ pts[j, :j]) / tail
    return pts


def phi(problem: PerturbationProblem, eps: ArrayLike) -> Vector:
    """1 + eps_ij - ||p_i - p_j||_Y; leaving the box raises instead of clamping."""
    e = _box(problem, eps)
    pts = point_map(problem, e)
    i, j = problem.pairs
    out = 1.0 + e - norm_eval_many(problem.target, pts[i] - pts[j])
    lo, hi = float(out.min(initial=0.0)), float(out.max(initial=0.0))
    if lo < -BOX_SLACK or hi > problem.box_beta + BOX_SLACK:
        raise ParameterizationAlarm(
            f"phi left the box [0, {problem.box_beta!r}]: range [{lo!r}, {hi!r}]"
        )
    return out


def position_target(
    base: NormSpec, target: NormSpec, *, samples: int = SANDWICH_SAMPLES, seed: int = 0
) -> tuple[NormSpec, float]:
    """Divide the target by its largest sampled ratio ||x||_Y / ||x||_X."""
    if base.dim != target.dim:
        raise DimensionError(f"base has dimension {base.dim}, target has {target.dim}")
    rows = sample_directions(base, np.random.default_rng(seed), samples)
    s = float(np.max(norm_eval_many(target, rows) / norm_eval_many(base, rows)))
    return (target if s == 1.0 else scaled(target, 1.0 / s)), s


def check_sandwich(
    base: NormSpec,
    target: NormSpec,
    R: float,
    samples: int = SANDWICH_SAMPLES,
    *,
    seed: int = 0,
) -> SandwichReport:
    """Range of ||x||_X over sampled unit vectors of Y; heuristic evidence for 1 <= ratio <= R."""
    if base.dim != target.dim:
        raise DimensionError(f"base has dimension {base.dim}, target has {target.dim}")
    sampler = target if target.hyperplane is not None or base.hyperplane is None else base
    rows = sample_directions(sampler, np.random.default_rng(seed), samples)
    ratios = norm_eval_many(base, rows) / norm_eval_many(target, rows)
    return SandwichReport(
        min_ratio=float(ratios.min()),
        max_ratio=float(ratios.max()),
        R=R,
        samples=len(rows),
        tolerance=SANDWICH_TOL,
    )


def _orlicz_functions(base: NormSpec) -> tuple[YoungFunction, ...]:
    match base.family:
        case MusielakOrlicz(functions=fs, gauge="luxemburg"):
            return fs
        case _:
            raise CapabilityError("orlicz perturbation needs a Luxemburg musielak_orlicz base")


def _permutation_matrix(perm: Sequence[int], signs: Sequence[int] | None = None) -> Vector:
    n = len(perm)
    Q = np.zeros((n, n))
    for k, i in enumerate(perm):
        Q[i, k] = 1.0 if signs is None else float(signs[i])
    return Q


def build_problem(
    base: NormSpec,
    target: NormSpec,
    variant: Variant,
    *,
    k: int | None = None,
    budget: int = MIN_BUDGET,
    seed: int = 0,
    samples: int = SANDWICH_SAMPLES,
    eps0: float | None = None,
) -> PerturbationProblem:
    if base.dim != target.dim:
        raise DimensionError(f"base has dimension {base.dim}, target has {target.dim}")
    n = base.dim
    Q = np.eye(n)
    sub: SubspaceParameters | None = None
    params: SymmetricParameters | OrliczParameters | SubspaceParameters
    match variant:
        case "symmetric":
            params = select_parameters_symmetric(base, budget, seed=seed, eps0=eps0)
            work = base if params.scale == 1.0 else scaled(base, params.scale)
            gammas, beta, R = (params.gamma,) * n, params.beta, params.R_lower
            normalization = {"kind": "unit-coordinates", "scale": params.scale}
        case "orlicz":
            fs = _orlicz_functions(base)
            longest = max(norm_eval(base, row) for row in np.eye(n))
            sigma = 1.0 / longest if longest > 1.0 else 1.0
            ordered, perm = sort_thresholds_first([dilate(f, sigma) for f in fs])
            params = select_parameters_orlicz(ordered)
            work = musielak_orlicz(ordered)
            Q = _permutation_matrix(perm)
            gammas, beta, R = params.gammas, params.beta, params.R_lower
            normalization = {"kind": "dilation", "sigma": sigma, "perm": list(perm)}
        case "subspace":
            sub = params = select_parameters_subspace(base, k)
            work = NormSpec(dim=n, family=LinftyHyperplane(params.canonical))
            Q = _permutation_matrix(params.perm, params.signs)
            gammas, beta, R = (1.0,) * params.m, params.beta, params.R
            normalization = {"kind": "canonical", "signs": list(params.signs), "perm": list(params.perm)}
        case _:
            raise ParameterError(f"unknown variant {variant!r}; expected one of {VARIANTS}")

    moved = target if np.array_equal(Q, np.eye(n)) else scaled(target, Q)
    positioned, s = position_target(work, moved, samples=samples, seed=seed)
    sandwich = check_sandwich(work, positioned, R, samples, seed=seed)
    flags = list(params.heuristic_flags)
    if not sandwich.passed:
        logger.warning(
            "sampled ratio range [%.12g, %.12g] leaves [1, R=%.12g]",
            sandwich.min_ratio,
            sandwich.max_ratio,
            R,
        )
        flags.append("sandwich-violated")
    return PerturbationProblem(
        variant=variant,
        base=work,
        target=positioned,
        original_target=target,
        box_beta=beta,
        gammas=tuple(float(g) for g in gammas),
        R=R,
        to_original=Q,
        target_scale=s,
        subspace=sub,
        heuristic_flags=tuple(flags),
        metadata={
            "normalization": normalization,
            "parameters": asdict(params),
            "sandwich": asdict(sandwich),
            "target_scale": s,
        },
    )


# -- solver ---------------------------------------------------------------------------------


def _residual(problem: PerturbationProblem, eps: Vector) -> tuple[Vector, float]:
    value = phi(problem, eps)
    return value, float(np.max(np.abs(value - eps), initial=0.0))


def solve_fixed_point(
    problem: PerturbationProblem,
    *,
    tol: float = FIXED_POINT_TOL,
    max_iter: int = MAX_ITERATIONS,
    damping: float = DAMPING,
) -> FixedPointSolution:
    """Damped iteration eps <- (1 - lam) eps + lam phi(eps), then a bounded least-squares fallback.

    The fallback runs when the residual fails to drop by 10% over 500 iterations or the
    iteration budget runs out.
    """
    if not 0.0 < damping <= 1.0:
        raise ParameterError(f"damping must lie in (0, 1], got {damping!r}")
    beta = problem.box_beta
    eps = np.zeros(problem.N)
    trace: list[float] = []
    checkpoint = INF
    it = 0
    while it < max_iter:
        it += 1
        value, res = _residual(problem, eps)
        if it == 1 or it % STAGNATION_WINDOW == 0:
            trace.append(res)
        if res <= tol:
            logger.info("damped iteration converged after %d evaluations (residual %.3e)", it, res)
            return FixedPointSolution(eps, res, it, "damped-iteration", tuple(trace))
        if it % STAGNATION_WINDOW == 0:
            if res > STAGNATION_RATIO * checkpoint:
                logger.info("damped iteration stagnated at residual %.3e; switching solver", res)
                break
            checkpoint = res
        eps = np.clip((1.0 - damping) * eps + damping * value, 0.0, beta)
    fit = optimize.least_squares(
        lambda e: phi(problem, e) - e,
        eps,
        bounds=(0.0, beta),
        method="trf",
        jac="2-point",
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
    )
    solution = np.clip(fit.x, 0.0, beta)
    _, res = _residual(problem, solution)
    trace.append(res)
    if res <= tol:
        logger.info("least-squares fallback converged (residual %.3e, %d evaluations)", res, fit.nfev)
        return FixedPointSolution(solution, res, it + int(fit.nfev), "quasi-newton", tuple(trace))
    raise SolverError(f"fixed-point residual {res:.3e} above {tol:.1e} after both solvers", tuple(trace))


def solved_points(problem: PerturbationProblem, solution: FixedPointSolution) -> PointSet:
    """p_j(eps*) mapped to the caller's coordinates, equilateral with distance 1 in their target."""
    working = point_map(problem, solution.epsilon)
    points = working @ problem.to_original.T / problem.target_scale
    return point_set(
        points,
        1.0,
        problem.original_target,
        construction=f"perturbation-{problem.variant}",
        parameters={
            "epsilon": [float(v) for v in solution.epsilon],
            "residual_inf": solution.residual_inf,
            "iterations": solution.iterations,
            "method": solution.method,
            **problem.metadata,
        },
    )


@dataclass(frozen=True, eq=False)
class PerturbationResult:
    problem: PerturbationProblem
    solution: FixedPointSolution
    points: PointSet
    certificate: EquilateralCertificate


def solve_perturbation(
    base: NormSpec,
    target: NormSpec,
    variant: Variant,
    *,
    k: int | None = None,
    budget: int = MIN_BUDGET,
    seed: int = 0,
    samples: int = SANDWICH_SAMPLES,
    tol: float = DEFAULT_TOL,
) -> PerturbationResult:
    problem = build_problem(base, target, variant, k=k, budget=budget, seed=seed, samples=samples)
    solution = solve_fixed_point(problem)
    points = solved_points(problem, solution)
    cert = certify_equilateral(points, tol=tol, heuristic_flags=problem.heuristic_flags)
    return PerturbationResult(problem=problem, solution=solution, points=points, certificate=cert)
