"""Monotone 1-D search primitives shared by the constructions.

Young functions may be non-differentiable or jump to +inf, so every 1-D problem in
the package is solved by bisection on a monotone predicate rather than by Newton steps.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable

from eqkit.errors import InternalError

logger = logging.getLogger(__name__)

INF = math.inf

BISECT_ATOL = 1e-13
BISECT_MAX_ITER = 200


def ext_mul(a: float, b: float) -> float:
    """Product on [0, inf] with the measure-theory convention 0 * inf = 0."""
    if a == 0.0 or b == 0.0:
        return 0.0
    return a * b


def ext_add(a: float, b: float) -> float:
    if math.isinf(a) or math.isinf(b):
        return INF
    return a + b


def bisect_predicate(
    pred: Callable[[float], bool],
    lo: float,
    hi: float,
    *,
    atol: float = BISECT_ATOL,
    rtol: float = 0.0,
    max_iter: int = BISECT_MAX_ITER,
) -> float:
    """Smallest point of [lo, hi] where a monotone predicate switches to True.

    `pred` must be False-then-True on [lo, hi] and True at `hi`. Returns the upper end
    of the final bracket, so the returned point always satisfies the predicate.
    """
    if pred(lo):
        return lo
    for _ in range(max_iter):
        if hi - lo <= max(atol, rtol * abs(hi)):
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def bisect_root(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    atol: float = BISECT_ATOL,
    max_iter: int = BISECT_MAX_ITER,
) -> float:
    """Root of a continuous function with func(lo) <= 0 <= func(hi) (or the reverse).

    Returns whichever end of the final bracket has the smaller |func|.
    """
    f_lo = func(lo)
    f_hi = func(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if (f_lo > 0.0) == (f_hi > 0.0):
        raise InternalError(f"bisection bracket [{lo!r}, {hi!r}] does not change sign")
    rising = f_hi > 0.0
    for _ in range(max_iter):
        if hi - lo <= atol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = func(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0.0) == rising:
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    return lo if abs(f_lo) <= abs(f_hi) else hi


def expand_upper(
    pred: Callable[[float], bool],
    start: float,
    *,
    factor: float = 2.0,
    max_steps: int = 200,
) -> float:
    """Grow `start` geometrically until `pred` holds; the doubling bracket of the constructions."""
    hi = start
    for _ in range(max_steps):
        if pred(hi):
            return hi
        hi *= factor
    raise InternalError(f"no upper bracket found after {max_steps} expansions from {start!r}")


def scan_first_crossing(
    func: Callable[[float], float],
    start: float,
    stop: float,
    cells: int,
    *,
    slack: float = 0.0,
) -> tuple[float, float] | None:
    """Walk a uniform grid from `start` toward `stop`; return the first cell where func >= -slack.

    The returned pair is ordered (inside, outside) with func(inside) < -slack <= func(outside).
    """
    prev = start
    if func(prev) >= -slack:
        return (prev, prev)
    for i in range(1, cells + 1):
        cur = start + (stop - start) * i / cells
        if func(cur) >= -slack:
            return (prev, cur)
        prev = cur
    return None
