from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqkit.domain.numerics import (
    INF,
    bisect_predicate,
    bisect_root,
    expand_upper,
    ext_add,
    ext_mul,
    scan_first_crossing,
)
from eqkit.errors import InternalError


def test_ext_mul_zero_times_inf_is_zero() -> None:
    assert ext_mul(0.0, INF) == 0.0
    assert ext_mul(INF, 0.0) == 0.0
    assert ext_mul(2.0, 3.0) == 6.0


def test_ext_add_absorbs_inf() -> None:
    assert ext_add(1.0, INF) == INF
    assert ext_add(1.0, 2.0) == 3.0


def test_bisect_predicate_returns_point_satisfying_predicate() -> None:
    out = bisect_predicate(lambda t: t >= 0.3, 0.0, 1.0)
    assert out >= 0.3
    assert out - 0.3 <= 2e-13


def test_bisect_predicate_true_at_lower_end() -> None:
    assert bisect_predicate(lambda t: True, 0.25, 1.0) == 0.25


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 1.0))
def test_bisect_predicate_brackets_threshold(x: float) -> None:
    out = bisect_predicate(lambda t: t >= x, 0.0, 1.0)
    assert x <= out <= x + 1e-12


def test_bisect_root_sqrt2() -> None:
    assert bisect_root(lambda t: t * t - 2.0, 0.0, 2.0) == pytest.approx(math.sqrt(2.0), abs=1e-12)


def test_bisect_root_decreasing_function() -> None:
    assert bisect_root(lambda t: 1.0 - t, 0.0, 4.0) == pytest.approx(1.0, abs=1e-12)


def test_bisect_root_requires_sign_change() -> None:
    with pytest.raises(InternalError):
        bisect_root(lambda t: t + 1.0, 0.0, 1.0)


def test_expand_upper_doubles() -> None:
    assert expand_upper(lambda t: t >= 100.0, 1.0) == 128.0


def test_expand_upper_gives_up() -> None:
    with pytest.raises(InternalError):
        expand_upper(lambda t: False, 1.0, max_steps=5)


def test_scan_first_crossing_upward() -> None:
    assert scan_first_crossing(lambda y: y - 0.25, 0.0, 1.0, 4) == (0.0, 0.25)


def test_scan_first_crossing_downward() -> None:
    assert scan_first_crossing(lambda y: 0.3 - y, 1.0, 0.0, 4) == (0.5, 0.25)


def test_scan_first_crossing_at_start() -> None:
    assert scan_first_crossing(lambda y: 1.0, 0.5, 0.0, 8) == (0.5, 0.5)


def test_scan_first_crossing_none() -> None:
    assert scan_first_crossing(lambda y: -1.0, 0.0, 1.0, 8) is None


def test_scan_first_crossing_accepts_rounding_slack() -> None:
    def excess(y: float) -> float:
        return -2.2e-16 if y <= -0.5 else -1.0

    assert scan_first_crossing(excess, 0.0, -0.5, 4) is None
    assert scan_first_crossing(excess, 0.0, -0.5, 4, slack=1e-12) == (-0.375, -0.5)
