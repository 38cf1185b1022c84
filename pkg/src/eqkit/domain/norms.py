"""Norm specifications on R^n and their evaluation.

A `NormSpec` is an immutable description (dimension plus family); every structural flag
(permutation invariance, 1-unconditionality, smoothness) is derived from the family and is
never detected numerically.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import optimize

from eqkit.domain.numerics import INF, bisect_predicate, expand_upper
from eqkit.domain.young import Power, YoungFunction
from eqkit.errors import DegenerateInputError, DimensionError, MembershipError, ParameterError

logger = logging.getLogger(__name__)

Vector = NDArray[np.float64]
Gauge = Literal["luxemburg", "amemiya"]

LUXEMBURG_RTOL = 1e-12
AMEMIYA_XTOL = 1e-12
AMEMIYA_LAMBDA_CAP = 1e6
MEMBERSHIP_RTOL = 1e-9
# Arguments overshooting a finiteness threshold by this relative margin are rounding noise.
_THRESHOLD_SLACK = 1e-15


def _check_p(p: float) -> None:
    if math.isnan(p) or p < 1.0:
        raise ParameterError(f"p must lie in [1, inf], got {p!r}")


@dataclass(frozen=True)
class Lp:
    p: float

    def __post_init__(self) -> None:
        _check_p(self.p)


@dataclass(frozen=True)
class MusielakOrlicz:
    functions: tuple[YoungFunction, ...]
    gauge: Gauge = "luxemburg"

    def __post_init__(self) -> None:
        if self.gauge not in ("luxemburg", "amemiya"):
            raise ParameterError(f"unknown gauge {self.gauge!r}")


@dataclass(frozen=True)
class Owl:
    """Ordered weighted l1: sum_i w_i |x|_(i) with |x| sorted descending."""

    w: tuple[float, ...]

    def __post_init__(self) -> None:
        w = self.w
        if not w or any(not math.isfinite(v) or v < 0.0 for v in w) or w[0] <= 0.0:
            raise ParameterError(f"owl weights must be finite, >= 0 with w_1 > 0, got {list(w)}")
        if any(b > a for a, b in zip(w, w[1:])):
            raise ParameterError(f"owl weights must be nonincreasing, got {list(w)}")


@dataclass(frozen=True)
class PermMix:
    """alpha * ||x||_p + beta * |sum_i x_i|."""

    p: float
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        _check_p(self.p)
        if not (math.isfinite(self.alpha) and self.alpha > 0.0):
            raise ParameterError(f"perm_mix alpha must be finite and > 0, got {self.alpha!r}")
        if not (math.isfinite(self.beta) and self.beta >= 0.0):
            raise ParameterError(f"perm_mix beta must be finite and >= 0, got {self.beta!r}")


@dataclass(frozen=True)
class LinftyHyperplane:
    a: tuple[float, ...]


@dataclass(frozen=True)
class Scaled:
    """||x|| = ||T x||_base."""

    base: NormSpec
    matrix: tuple[tuple[float, ...], ...]

    @cached_property
    def T(self) -> Vector:
        return np.array(self.matrix, dtype=float)


NormFamily = Lp | MusielakOrlicz | Owl | PermMix | LinftyHyperplane | Scaled


@dataclass(frozen=True)
class Flags:
    permutation_invariant: bool
    unconditional: bool
    smooth: bool

    @property
    def symmetric(self) -> bool:
        return self.permutation_invariant and self.unconditional


@dataclass(frozen=True)
class NormSpec:
    dim: int
    family: NormFamily

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ParameterError(f"dimension must be >= 1, got {self.dim}")
        match self.family:
            case MusielakOrlicz(functions=fs) if len(fs) != self.dim:
                raise DimensionError(f"musielak_orlicz needs {self.dim} functions, got {len(fs)}")
            case Owl(w=w) if len(w) != self.dim:
                raise DimensionError(f"owl needs {self.dim} weights, got {len(w)}")
            case LinftyHyperplane(a=a) if len(a) != self.dim:
                raise DimensionError(f"hyperplane needs {self.dim} coefficients, got {len(a)}")
            case LinftyHyperplane(a=a):
                Hyperplane(a)
            case Scaled(base=base, matrix=matrix):
                if base.dim != self.dim or len(matrix) != self.dim or any(len(r) != self.dim for r in matrix):
                    raise DimensionError(f"scaled spec needs a {self.dim}x{self.dim} matrix and base")
                T = np.array(matrix, dtype=float)
                if not np.all(np.isfinite(T)) or np.linalg.matrix_rank(T) < self.dim:
                    raise ParameterError("scaling matrix must be finite and invertible")
            case _:
                pass

    @cached_property
    def flags(self) -> Flags:
        return _flags(self)

    @property
    def is_permutation_invariant(self) -> bool:
        return self.flags.permutation_invariant

    @property
    def is_unconditional(self) -> bool:
        return self.flags.unconditional

    @property
    def is_smooth_claimed(self) -> bool:
        return self.flags.smooth

    @property
    def is_symmetric(self) -> bool:
        return self.flags.symmetric

    @cached_property
    def hyperplane(self) -> Hyperplane | None:
        """The subspace this norm lives on, if any (looking through `scaled`)."""
        match self.family:
            case LinftyHyperplane(a=a):
                return Hyperplane(a)
            case Scaled(base=base, matrix=matrix):
                inner = base.hyperplane
                if inner is None:
                    return None
                # {x : <a, T x> = 0} = {x : <T^t a, x> = 0}
                T = np.array(matrix, dtype=float)
                return Hyperplane(tuple(float(v) for v in T.T @ np.array(inner.a)))
            case _:
                return None


def lp(p: float, n: int) -> NormSpec:
    return NormSpec(dim=n, family=Lp(p=p))


def musielak_orlicz(functions: Sequence[YoungFunction], gauge: Gauge = "luxemburg") -> NormSpec:
    return NormSpec(dim=len(functions), family=MusielakOrlicz(tuple(functions), gauge))


def scaled(base: NormSpec, T: ArrayLike) -> NormSpec:
    """`base` composed with T; a scalar or a 1-D array is read as c*I or diag(d)."""
    arr = np.asarray(T, dtype=float)
    if arr.ndim == 0:
        arr = float(arr) * np.eye(base.dim)
    elif arr.ndim == 1:
        arr = np.diag(arr)
    matrix = tuple(tuple(float(v) for v in row) for row in arr)
    return NormSpec(dim=base.dim, family=Scaled(base=base, matrix=matrix))


def _flags(spec: NormSpec) -> Flags:
    match spec.family:
        case Lp(p=p):
            return Flags(True, True, 1.0 < p < INF)
        case MusielakOrlicz(functions=fs, gauge=gauge):
            smooth = gauge == "luxemburg" and all(isinstance(f, Power) and f.p > 1.0 for f in fs)
            return Flags(all(f == fs[0] for f in fs), True, smooth)
        case Owl():
            return Flags(True, True, False)
        case PermMix(p=p, beta=beta):
            return Flags(True, beta == 0.0, beta == 0.0 and 1.0 < p < INF)
        case LinftyHyperplane():
            return Flags(False, False, False)
        case Scaled(base=base) as fam:
            return _scaled_flags(base.flags, fam.T)
    raise ParameterError(f"unsupported norm family {spec.family!r}")  # pragma: no cover


def _scaled_flags(base: Flags, T: Vector) -> Flags:
    diag = np.diag(T)
    if not np.any(T - np.diag(diag)):
        if np.all(diag == diag[0]):
            return base
        if base.symmetric and np.all(np.abs(diag) == abs(diag[0])):
            return base
        return Flags(False, base.unconditional, base.smooth)
    nonzero = T != 0.0
    signed_perm = (
        np.all(nonzero.sum(axis=0) == 1)
        and np.all(nonzero.sum(axis=1) == 1)
        and np.all(np.abs(T[nonzero]) == np.abs(T[nonzero][0]))
    )
    if signed_perm and base.symmetric:
        return base
    return Flags(False, False, base.smooth)


@dataclass(frozen=True)
class Hyperplane:
    """{x : <a, x> = 0} inside l_inf^n, with its canonical form 0 <= |a|_(1) <= ... <= |a|_(n).

    `signs` and `perm` record the isometry: canonical[k] = signs[perm[k]] * a[perm[k]].
    """

    a: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.a or any(not math.isfinite(v) for v in self.a):
            raise DegenerateInputError("hyperplane coefficients must be finite")
        if all(v == 0.0 for v in self.a):
            raise DegenerateInputError("hyperplane coefficients are all zero")

    @property
    def dim(self) -> int:
        return len(self.a)

    @cached_property
    def signs(self) -> tuple[int, ...]:
        return tuple(-1 if v < 0.0 else 1 for v in self.a)

    @cached_property
    def perm(self) -> tuple[int, ...]:
        order = np.argsort(np.abs(np.array(self.a)), kind="stable")
        return tuple(int(i) for i in order)

    @cached_property
    def canonical(self) -> tuple[float, ...]:
        return tuple(abs(self.a[i]) for i in self.perm)

    def to_canonical(self, x: ArrayLike) -> Vector:
        v = np.asarray(x, dtype=float)
        idx = np.array(self.perm)
        return v[..., idx] * np.array(self.signs, dtype=float)[idx]

    def from_canonical(self, y: ArrayLike) -> Vector:
        v = np.asarray(y, dtype=float)
        idx = np.array(self.perm)
        out = np.empty_like(v)
        out[..., idx] = v * np.array(self.signs, dtype=float)[idx]
        return out

    def residual(self, x: ArrayLike) -> float:
        """|<a, x>| relative to ||a||_2 ||x||_2 (0 for x = 0)."""
        v = np.asarray(x, dtype=float)
        a = np.array(self.a)
        scale = float(np.linalg.norm(a) * np.linalg.norm(v))
        if scale == 0.0:
            return 0.0
        return abs(float(a @ v)) / scale

    def residuals(self, rows: ArrayLike) -> Vector:
        m = np.asarray(rows, dtype=float)
        a = np.array(self.a)
        scale = np.linalg.norm(a) * np.linalg.norm(m, axis=1)
        safe = np.where(scale > 0.0, scale, 1.0)
        return np.where(scale > 0.0, np.abs(m @ a) / safe, 0.0)

    def contains(self, x: ArrayLike, rtol: float = MEMBERSHIP_RTOL) -> bool:
        return self.residual(x) <= rtol

    def project(self, x: ArrayLike) -> Vector:
        v = np.asarray(x, dtype=float)
        a = np.array(self.a)
        return v - np.multiply.outer(v @ a / (a @ a), a)


def canonicalize_hyperplane(a: Sequence[float]) -> tuple[Hyperplane, tuple[int, ...], tuple[int, ...]]:
    h = Hyperplane(tuple(float(v) for v in a))
    return Hyperplane(h.canonical), h.signs, h.perm


def restore_coefficients(
    canonical: Sequence[float], signs: Sequence[int], perm: Sequence[int]
) -> tuple[float, ...]:
    out = [0.0] * len(canonical)
    for k, i in enumerate(perm):
        out[i] = signs[i] * canonical[k]
    return tuple(out)


def as_vector(spec_dim: int, x: ArrayLike) -> Vector:
    v = np.asarray(x, dtype=float)
    if v.shape != (spec_dim,):
        raise DimensionError(f"expected a vector of length {spec_dim}, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DimensionError("vector entries must be finite")
    return v


def _lp_value(v: Vector, p: float) -> float:
    m = float(np.max(np.abs(v))) if v.size else 0.0
    if m == 0.0:
        return 0.0
    if p == INF:
        return m
    if p == 1.0:
        return float(np.sum(np.abs(v)))
    return m * float(np.sum((np.abs(v) / m) ** p)) ** (1.0 / p)


def _lp_rows(rows: Vector, p: float) -> Vector:
    if p in (1.0, 2.0, INF):
        return np.asarray(np.linalg.norm(rows, ord=p, axis=1), dtype=float)
    m = np.max(np.abs(rows), axis=1)
    safe = np.where(m > 0.0, m, 1.0)
    return np.asarray(m * np.sum((np.abs(rows) / safe[:, None]) ** p, axis=1) ** (1.0 / p), dtype=float)


def _clipped(f: YoungFunction, u: float) -> float:
    b = f.finite_threshold
    if u > b and u <= b * (1.0 + _THRESHOLD_SLACK):
        u = b
    return f.evaluate(u)


def _modular(functions: Sequence[YoungFunction], absx: Sequence[float], scale: float) -> float:
    """sum_i f_i(scale * |x_i|), +inf as soon as one term is."""
    total = 0.0
    for f, xi in zip(functions, absx):
        if xi == 0.0:
            continue
        term = _clipped(f, scale * xi)
        if math.isinf(term):
            return INF
        total += term
    return total


def luxemburg_eval(functions: Sequence[YoungFunction], x: ArrayLike) -> float:
    """inf{r > 0 : sum_i f_i(|x_i| / r) <= 1}, by bisection to relative 1e-12."""
    absx = [abs(float(v)) for v in np.asarray(x, dtype=float)]
    if not any(absx):
        return 0.0
    r_lo = max(xi / f.finite_threshold for f, xi in zip(functions, absx))

    def feasible(r: float) -> bool:
        return r > 0.0 and _modular(functions, absx, 1.0 / r) <= 1.0

    if r_lo > 0.0 and feasible(r_lo):
        return r_lo
    hi = expand_upper(feasible, max(2.0 * r_lo, max(absx)))
    return bisect_predicate(feasible, r_lo, hi, atol=0.0, rtol=LUXEMBURG_RTOL)


def amemiya_eval(functions: Sequence[YoungFunction], x: ArrayLike) -> tuple[float, bool]:
    """inf over lam > 0 of (sum_i f_i(lam |x_i|) + 1) / lam.

    The search runs over log(lam) with lam capped at 1e6 / max|x_i| and at the finiteness
    thresholds. The flag is False when the best value sits at the 1e6 cap, i.e. the infimum
    is only approached in the limit.
    """
    absx = [abs(float(v)) for v in np.asarray(x, dtype=float)]
    if not any(absx):
        return 0.0, True
    m = max(absx)
    domain_cap = min(f.finite_threshold / xi for f, xi in zip(functions, absx) if xi > 0.0)
    lam_hi = min(AMEMIYA_LAMBDA_CAP / m, domain_cap)
    lam_lo = min(lam_hi, 1.0 / (AMEMIYA_LAMBDA_CAP * m))

    def objective(log_lam: float) -> float:
        lam = math.exp(log_lam)
        return (_modular(functions, absx, lam) + 1.0) / lam

    lo, hi = math.log(lam_lo), math.log(lam_hi)
    grid = np.linspace(lo, hi, 65)
    values = [objective(float(g)) for g in grid]
    best = int(np.argmin(values))
    left = float(grid[max(best - 1, 0)])
    right = float(grid[min(best + 1, len(grid) - 1)])
    candidates = [(values[best], float(grid[best]))]
    if right > left:
        res = optimize.minimize_scalar(
            objective, bounds=(left, right), method="bounded", options={"xatol": AMEMIYA_XTOL}
        )
        candidates.append((float(res.fun), float(res.x)))
    value, at = min(candidates)
    attained = not (lam_hi < domain_cap and hi - at <= 1e-6)
    if not attained:
        logger.debug("amemiya infimum approached at the lambda cap %.3g", lam_hi)
    return value, attained


def subspace_norm_eval(h: Hyperplane, x: ArrayLike) -> float:
    v = as_vector(h.dim, x)
    if not h.contains(v):
        raise MembershipError(f"point is off the hyperplane (relative residual {h.residual(v):.3e})")
    return float(np.max(np.abs(v))) if v.size else 0.0


def norm_eval(spec: NormSpec, x: ArrayLike) -> float:
    v = as_vector(spec.dim, x)
    return _eval(spec, v)


def _eval(spec: NormSpec, v: Vector) -> float:
    match spec.family:
        case Lp(p=p):
            return _lp_value(v, p)
        case MusielakOrlicz(functions=fs, gauge="luxemburg"):
            return luxemburg_eval(fs, v)
        case MusielakOrlicz(functions=fs):
            return amemiya_eval(fs, v)[0]
        case Owl(w=w):
            return float(np.sort(np.abs(v))[::-1] @ np.array(w))
        case PermMix(p=p, alpha=alpha, beta=beta):
            return alpha * _lp_value(v, p) + beta * abs(float(np.sum(v)))
        case LinftyHyperplane(a=a):
            return subspace_norm_eval(Hyperplane(a), v)
        case Scaled(base=base) as fam:
            return _eval(base, fam.T @ v)
    raise ParameterError(f"unsupported norm family {spec.family!r}")  # pragma: no cover


def norm_eval_many(spec: NormSpec, xs: ArrayLike) -> Vector:
    """Row-wise norms; closed-form families are vectorized, the rest loop."""
    rows = np.asarray(xs, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != spec.dim:
        raise DimensionError(f"expected rows of length {spec.dim}, got shape {rows.shape}")
    if not np.all(np.isfinite(rows)):
        raise DimensionError("vector entries must be finite")
    match spec.family:
        case Lp(p=p):
            return _lp_rows(rows, p)
        case PermMix(p=p, alpha=alpha, beta=beta):
            return alpha * _lp_rows(rows, p) + beta * np.abs(rows.sum(axis=1))
        case Owl(w=w):
            return np.asarray(np.sort(np.abs(rows), axis=1)[:, ::-1] @ np.array(w), dtype=float)
        case LinftyHyperplane(a=a):
            h = Hyperplane(a)
            bad = np.flatnonzero(h.residuals(rows) > MEMBERSHIP_RTOL)
            if bad.size:
                raise MembershipError(f"row {int(bad[0])} is off the hyperplane")
            return np.asarray(np.max(np.abs(rows), axis=1), dtype=float)
        case Scaled(base=base) as fam:
            return norm_eval_many(base, rows @ fam.T.T)
        case _:
            return np.array([_eval(spec, r) for r in rows])


def structured_directions(n: int) -> Vector:
    """+-e_i, then (e_i +- e_j) / sqrt 2 for i < j."""
    eye = np.eye(n)
    rows = [s * eye[i] for i in range(n) for s in (1.0, -1.0)]
    for i in range(n):
        for j in range(i + 1, n):
            for s in (1.0, -1.0):
                rows.append((eye[i] + s * eye[j]) / math.sqrt(2.0))
                rows.append(-(eye[i] + s * eye[j]) / math.sqrt(2.0))
    return np.array(rows).reshape(-1, n)


def sample_directions(spec: NormSpec, rng: np.random.Generator, count: int) -> Vector:
    """Structured seeds followed by Gaussian draws, all lying on the hyperplane of a subspace spec.

    Seeds fill at most half of `count`; the rest are always random.
    """
    n = spec.dim
    h = spec.hyperplane
    seeds = structured_directions(n)[: count // 2]
    draws = rng.standard_normal((count, n))
    rows = np.vstack([seeds, draws])
    if h is not None:
        rows = h.project(rows)
    lengths = np.linalg.norm(rows, axis=1)
    rows = rows[lengths > 1e-12]
    return np.asarray(rows[:count], dtype=float)


def sample_unit_sphere(spec: NormSpec, rng: np.random.Generator, count: int) -> Vector:
    rows = sample_directions(spec, rng, count)
    return rows / norm_eval_many(spec, rows)[:, None]
