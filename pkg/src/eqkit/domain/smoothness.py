"""Modulus of smoothness estimates and the supporting functional of symmetric spaces.

rho_X(t) = sup over unit x, y of (||x + t y|| + ||x - t y||) / 2 - 1. Every value here is a
lower estimate obtained by sampling; callers label downstream claims as heuristic.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from eqkit.domain.norms import NormSpec, Vector, norm_eval, norm_eval_many
from eqkit.errors import CapabilityError, ParameterError, SmoothnessBudgetError

logger = logging.getLogger(__name__)

MIN_BUDGET = 100
CLIMB_STEPS = 50
CLIMB_STEP0 = 0.1
CLIMB_SHRINK = 0.7
EPS0_GRID = tuple(2.0**-k for k in range(41))


def _normalize(spec: NormSpec, rows: Vector) -> Vector:
    lengths = norm_eval_many(spec, rows)
    safe = np.where(lengths > 0.0, lengths, 1.0)
    return rows / safe[:, None]


def _pair_value(spec: NormSpec, x: Vector, y: Vector, t: float) -> Vector:
    return 0.5 * (norm_eval_many(spec, x + t * y) + norm_eval_many(spec, x - t * y)) - 1.0


def _seed_pairs(n: int) -> list[tuple[Vector, Vector]]:
    eye = np.eye(n)
    if n == 1:
        return [(eye[0], eye[0])]
    return [(eye[0], eye[1]), (eye[0] + eye[1], eye[0] - eye[1])]


def _starting_pairs(spec: NormSpec, budget: int, seed: int) -> tuple[Vector, Vector, list[np.random.Generator]]:
    """One generator per pair, so a larger budget only appends pairs."""
    n = spec.dim
    seeds = _seed_pairs(n)
    rngs = [np.random.default_rng([seed, i]) for i in range(budget)]
    xs = np.empty((budget, n))
    ys = np.empty((budget, n))
    for i, rng in enumerate(rngs):
        if i < len(seeds):
            xs[i], ys[i] = seeds[i]
        else:
            xs[i], ys[i] = rng.standard_normal(n), rng.standard_normal(n)
    h = spec.hyperplane
    if h is not None:
        xs, ys = h.project(xs), h.project(ys)
        # A projected seed can vanish (a = e_1); fall back to a Gaussian direction.
        for rows in (xs, ys):
            dead = np.linalg.norm(rows, axis=1) < 1e-12
            for i in np.flatnonzero(dead):
                rows[i] = h.project(rngs[i].standard_normal(n))
    return _normalize(spec, xs), _normalize(spec, ys), rngs


def modulus_of_smoothness(spec: NormSpec, t: float, budget: int = MIN_BUDGET, *, seed: int = 0) -> float:
    """Lower estimate of rho_X(t): best of `budget` unit pairs, each hill-climbed for 50 steps.

    The first pairs are (e1, e2) and ((e1 + e2), (e1 - e2)) normalized, which already attain the
    supremum for l_p. The estimate is clamped to [0, t] and is monotone in `budget`.
    """
    if not (math.isfinite(t) and t > 0.0):
        raise ParameterError(f"t must be finite and > 0, got {t!r}")
    if budget < MIN_BUDGET:
        raise ParameterError(f"smoothness budget must be >= {MIN_BUDGET}, got {budget}")
    n = spec.dim
    x, y, rngs = _starting_pairs(spec, budget, seed)
    coords = np.array([rng.integers(0, 2 * n, size=CLIMB_STEPS) for rng in rngs])
    values = _pair_value(spec, x, y, t)
    step = np.full(budget, CLIMB_STEP0)
    rows = np.arange(budget)
    h = spec.hyperplane

    for s in range(CLIMB_STEPS):
        k = coords[:, s]
        on_y = (k >= n)[:, None]
        best_x, best_y, best_val = x, y, values
        for sign in (1.0, -1.0):
            delta = np.zeros((budget, n))
            delta[rows, k % n] = sign * step
            if h is not None:
                delta = h.project(delta)
            cx = _normalize(spec, np.where(on_y, x, x + delta))
            cy = _normalize(spec, np.where(on_y, y + delta, y))
            cval = _pair_value(spec, cx, cy, t)
            better = cval > best_val
            best_x = np.where(better[:, None], cx, best_x)
            best_y = np.where(better[:, None], cy, best_y)
            best_val = np.where(better, cval, best_val)
        improved = best_val > values
        step = np.where(improved, step, step * CLIMB_SHRINK)
        x, y, values = best_x, best_y, best_val

    estimate = min(max(float(np.max(values)), 0.0), t)
    logger.debug("rho(%g) >= %.6g over %d pairs", t, estimate, budget)
    return estimate


def find_eps0(spec: NormSpec, n: int, budget: int = MIN_BUDGET, *, seed: int = 0) -> float:
    """Largest eps0 in {1, 1/2, ..., 2^-40} with estimated rho(eps0) / eps0 <= 1 / (6n)."""
    if not spec.is_smooth_claimed:
        logger.warning("norm is not flagged smooth; the eps0 search is expected to fail")
    bound = 1.0 / (6.0 * n)
    for eps in EPS0_GRID:
        ratio = modulus_of_smoothness(spec, eps, budget, seed=seed) / eps
        if ratio <= bound:
            logger.info("eps0 = %g (rho/eps = %.4g <= %.4g)", eps, ratio, bound)
            return eps
    raise SmoothnessBudgetError(
        f"no eps0 >= 2^-40 with rho(eps0)/eps0 <= 1/(6*{n}); the norm looks non-smooth"
    )


def supporting_functional_symmetric(spec: NormSpec) -> tuple[float, Vector]:
    """c with ||(c, c, 0, ..., 0)|| = 1 and the functional (1/2c, 1/2c, 0, ..., 0) supporting it."""
    if not spec.is_smooth_claimed or not spec.is_symmetric:
        raise CapabilityError("supporting functional needs a smooth symmetric norm")
    if spec.dim < 2:
        raise ParameterError("supporting functional needs dimension >= 2")
    v = np.zeros(spec.dim)
    v[:2] = 1.0
    c = 1.0 / norm_eval(spec, v)
    functional = np.zeros(spec.dim)
    functional[:2] = 1.0 / (2.0 * c)
    return c, functional
