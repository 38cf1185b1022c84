"""Young (coordinate) functions: convex, left-continuous f: [0, inf) -> [0, inf] with f(0) = 0.

Four closed-form families can be built directly (`Power`, `Indicator`, `PiecewiseLinear`,
`AffineMix`). `AffineTail` only appears as the output of `regularize`, where a function with a
finite threshold is continued affinely past it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal

from eqkit.domain.numerics import INF, bisect_predicate, expand_upper, ext_mul
from eqkit.errors import DomainError, NoSolutionError, ParameterError

logger = logging.getLogger(__name__)

Side = Literal["left", "right"]

LIFT_MAX_ULPS = 64


def _check_t(t: float) -> None:
    if math.isnan(t) or t < 0.0:
        raise DomainError(f"Young functions are defined on [0, inf), got t={t!r}")


def _finite_positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0.0):
        raise ParameterError(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class Power:
    """f(t) = t**p."""

    p: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.p) and self.p >= 1.0):
            raise ParameterError(f"power exponent must be finite and >= 1, got {self.p!r}")

    def evaluate(self, t: float) -> float:
        try:
            return t**self.p
        except OverflowError:
            return INF

    def derivative(self, t: float, side: Side) -> float:
        if self.p == 1.0:
            return 1.0
        return self.p * t ** (self.p - 1.0)

    def inverse(self, y: float) -> float:
        return y ** (1.0 / self.p)

    @property
    def zero_threshold(self) -> float:
        return 0.0

    @property
    def finite_threshold(self) -> float:
        return INF

    @property
    def is_strictly_increasing(self) -> bool:
        return True


@dataclass(frozen=True)
class Indicator:
    """f = 0 on [0, b], +inf beyond: the coordinate function of the sup-norm when b = 1."""

    b: float

    def __post_init__(self) -> None:
        _finite_positive("indicator threshold b", self.b)

    def evaluate(self, t: float) -> float:
        return 0.0 if t <= self.b else INF

    def derivative(self, t: float, side: Side) -> float:
        if t == self.b and side == "right":
            return INF
        return 0.0

    def inverse(self, y: float) -> float:
        raise NoSolutionError(f"indicator({self.b!r}) only takes the values 0 and inf, got y={y!r}")

    @property
    def zero_threshold(self) -> float:
        return self.b

    @property
    def finite_threshold(self) -> float:
        return self.b

    @property
    def is_strictly_increasing(self) -> bool:
        return False


@dataclass(frozen=True)
class PiecewiseLinear:
    """Zero up to breakpoints[0]; slope slopes[i] from breakpoints[i] on; +inf past `cutoff`."""

    breakpoints: tuple[float, ...]
    slopes: tuple[float, ...]
    cutoff: float | None = None

    def __post_init__(self) -> None:
        bps, slopes = self.breakpoints, self.slopes
        if not bps or len(bps) != len(slopes):
            raise ParameterError("piecewise_linear needs as many slopes as breakpoints (at least one)")
        if any(not math.isfinite(v) for v in (*bps, *slopes)):
            raise ParameterError("piecewise_linear breakpoints and slopes must be finite")
        if bps[0] < 0.0 or any(b1 <= b0 for b0, b1 in zip(bps, bps[1:])):
            raise ParameterError(f"breakpoints must be >= 0 and strictly ascending, got {list(bps)}")
        if slopes[0] < 0.0 or any(s1 < s0 for s0, s1 in zip(slopes, slopes[1:])):
            raise ParameterError(f"slopes must be >= 0 and nondecreasing, got {list(slopes)}")
        if self.cutoff is not None:
            _finite_positive("piecewise_linear cutoff", self.cutoff)
        elif slopes[-1] == 0.0:
            raise ParameterError("piecewise_linear without cutoff must end with a positive slope")

    def _segments(self) -> list[tuple[float, float, float]]:
        end_all = INF if self.cutoff is None else self.cutoff
        segs: list[tuple[float, float, float]] = []
        if self.breakpoints[0] > 0.0:
            segs.append((0.0, min(self.breakpoints[0], end_all), 0.0))
        ends = (*self.breakpoints[1:], INF)
        for start, end, slope in zip(self.breakpoints, ends, self.slopes):
            if start >= end_all:
                break
            segs.append((start, min(end, end_all), slope))
        return segs

    def evaluate(self, t: float) -> float:
        if self.cutoff is not None and t > self.cutoff:
            return INF
        value = 0.0
        for start, end, slope in self._segments():
            if t <= end:
                return value + slope * (t - start)
            value += slope * (end - start)
        return value

    def derivative(self, t: float, side: Side) -> float:
        for start, end, slope in self._segments():
            inside = start < t <= end if side == "left" else start <= t < end
            if inside:
                return slope
        return INF

    def inverse(self, y: float) -> float:
        value = 0.0
        for start, end, slope in self._segments():
            top = value + slope * (end - start) if slope > 0.0 else value
            if slope > 0.0 and y <= top:
                return start + (y - value) / slope
            value = top
        raise NoSolutionError(f"level {y!r} exceeds the largest finite value {value!r}")

    @property
    def zero_threshold(self) -> float:
        rise = next((bp for bp, s in zip(self.breakpoints, self.slopes) if s > 0.0), INF)
        return rise if self.cutoff is None else min(rise, self.cutoff)

    @property
    def finite_threshold(self) -> float:
        return INF if self.cutoff is None else self.cutoff

    @property
    def is_strictly_increasing(self) -> bool:
        return self.breakpoints[0] == 0.0 and self.slopes[0] > 0.0


@dataclass(frozen=True)
class AffineMix:
    """f(t) = w * base(t) + s * t."""

    base: YoungFunction
    w: float
    s: float

    def __post_init__(self) -> None:
        if not (0.0 < self.w <= 1.0):
            raise ParameterError(f"affine_mix weight must lie in (0, 1], got {self.w!r}")
        if not (math.isfinite(self.s) and self.s >= 0.0):
            raise ParameterError(f"affine_mix slope must be finite and >= 0, got {self.s!r}")

    def evaluate(self, t: float) -> float:
        return ext_mul(self.w, self.base.evaluate(t)) + self.s * t

    def derivative(self, t: float, side: Side) -> float:
        return ext_mul(self.w, self.base.derivative(t, side)) + self.s

    def inverse(self, y: float) -> float:
        return _bisect_inverse(self, y)

    @property
    def zero_threshold(self) -> float:
        return 0.0 if self.s > 0.0 else self.base.zero_threshold

    @property
    def finite_threshold(self) -> float:
        return self.base.finite_threshold

    @property
    def is_strictly_increasing(self) -> bool:
        return self.s > 0.0 or self.base.is_strictly_increasing


@dataclass(frozen=True)
class AffineTail:
    """`head` on [0, b], continued past b by the line through (b, head(b)) with the given slope."""

    head: YoungFunction
    b: float
    slope: float

    def evaluate(self, t: float) -> float:
        if t <= self.b:
            return self.head.evaluate(t)
        return self.head.evaluate(self.b) + self.slope * (t - self.b)

    def derivative(self, t: float, side: Side) -> float:
        if t < self.b or (t == self.b and side == "left"):
            return self.head.derivative(t, side)
        return self.slope

    def inverse(self, y: float) -> float:
        return _bisect_inverse(self, y)

    @property
    def zero_threshold(self) -> float:
        return self.head.zero_threshold

    @property
    def finite_threshold(self) -> float:
        return INF

    @property
    def is_strictly_increasing(self) -> bool:
        return self.head.is_strictly_increasing and self.slope > 0.0


YoungFunction = Power | Indicator | PiecewiseLinear | AffineMix | AffineTail


def _bisect_inverse(f: YoungFunction, y: float) -> float:
    b = f.finite_threshold
    hi = b if math.isfinite(b) else expand_upper(lambda t: f.evaluate(t) >= y, 1.0)
    return bisect_predicate(lambda t: f.evaluate(t) >= y, 0.0, hi)


def _lift(f: YoungFunction, y: float, t: float) -> float:
    """Step t up by ulps until f(t) >= y; closed-form inverses can land a few ulps short."""
    for _ in range(LIFT_MAX_ULPS):
        if f.evaluate(t) >= y:
            return t
        t = math.nextafter(t, INF)
    return _bisect_inverse(f, y)


def evaluate(f: YoungFunction, t: float) -> float:
    _check_t(t)
    return f.evaluate(t)


def one_sided_derivative(f: YoungFunction, t: float, side: Side) -> float:
    _check_t(t)
    if side == "left" and t == 0.0:
        raise DomainError("left derivative requires t > 0")
    if t > f.finite_threshold:
        raise DomainError(f"t={t!r} lies outside the closure of the finite domain [0, {f.finite_threshold!r}]")
    return f.derivative(t, side)


def sup_finite_value(f: YoungFunction) -> float:
    """f(b) at the finiteness threshold b, or inf for finite-valued functions."""
    b = f.finite_threshold
    return f.evaluate(b) if math.isfinite(b) else INF


def is_finite_valued(f: YoungFunction) -> bool:
    return math.isinf(f.finite_threshold)


def is_regular(f: YoungFunction) -> bool:
    """Strictly increasing and finite everywhere: the case the unit-sphere identity sum f(|x_i|) = 1 covers."""
    return f.is_strictly_increasing and is_finite_valued(f)


def inverse_solve(f: YoungFunction, y: float) -> float:
    """Smallest t with f(t) >= y; the returned t always satisfies f(t) >= y in floating point.

    Closed forms for power and piecewise functions, bisection to 1e-13 otherwise. Raises
    NoSolutionError when y lies above every finite value of f.
    """
    if math.isnan(y) or y < 0.0:
        raise DomainError(f"inverse_solve level must be >= 0, got {y!r}")
    if y == 0.0:
        return 0.0
    top = sup_finite_value(f)
    if y > top:
        raise NoSolutionError(f"level {y!r} exceeds sup of finite values {top!r}")
    return _lift(f, y, f.inverse(y))


def regularize(f: YoungFunction, k: int) -> YoungFunction:
    """f_k = ((k-1)/k) f + t/k on [0, b]; past a finite threshold b the affine continuation
    (f_k(b)/b + k f_k^-(b)) t - k f_k^-(b) b, which meets f_k(b) at t = b.
    """
    if k < 2:
        raise ParameterError(f"regularization index must be >= 2, got {k}")
    mix = AffineMix(base=f, w=(k - 1) / k, s=1.0 / k)
    b = f.finite_threshold
    if math.isinf(b):
        return mix
    left = mix.derivative(b, "left")
    slope = mix.evaluate(b) / b + k * left
    return AffineTail(head=mix, b=b, slope=slope)


def dilate(f: YoungFunction, sigma: float) -> YoungFunction:
    """t -> f(sigma * t) for sigma in (0, 1], kept inside the closed-form families."""
    if not (0.0 < sigma <= 1.0):
        raise ParameterError(f"dilation factor must lie in (0, 1], got {sigma!r}")
    if sigma == 1.0:
        return f
    match f:
        case Power(p=p):
            return AffineMix(base=f, w=sigma**p, s=0.0)
        case Indicator(b=b):
            return Indicator(b=b / sigma)
        case PiecewiseLinear(breakpoints=bps, slopes=slopes, cutoff=cutoff):
            return PiecewiseLinear(
                breakpoints=tuple(bp / sigma for bp in bps),
                slopes=tuple(s * sigma for s in slopes),
                cutoff=None if cutoff is None else cutoff / sigma,
            )
        case AffineMix(base=base, w=w, s=s):
            return AffineMix(base=dilate(base, sigma), w=w, s=s * sigma)
        case AffineTail(head=head, b=b, slope=slope):
            return AffineTail(head=dilate(head, sigma), b=b / sigma, slope=slope * sigma)
    raise ParameterError(f"unsupported Young function {f!r}")  # pragma: no cover


def half_level(f: YoungFunction) -> tuple[float, bool]:
    """(c, True) with c the smallest point where f reaches 1/2, else (b, False) at the threshold b."""
    try:
        return inverse_solve(f, 0.5), True
    except NoSolutionError:
        return f.finite_threshold, False
