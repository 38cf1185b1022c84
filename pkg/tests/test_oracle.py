from __future__ import annotations

import math

import numpy as np
import pytest

from eqkit.domain.construct import perm_invariant_equilateral
from eqkit.domain.norms import lp
from eqkit.domain.oracle import SearchConfig, search_equilateral
from eqkit.errors import DimensionError, ParameterError, ScaleError


def test_finds_euclidean_triangle() -> None:
    result = search_equilateral(SearchConfig(norm=lp(2.0, 2), m=3, restarts=8), seed=0)
    assert result.found
    assert result.verdict == "found"
    assert result.points is not None
    assert result.points.construction == "oracle"
    assert result.certificate is not None and result.certificate.passed


def test_four_points_in_euclidean_plane_are_inconclusive() -> None:
    cfg = SearchConfig(norm=lp(2.0, 2), m=4, restarts=2, max_sweeps=50)
    result = search_equilateral(cfg, seed=1)
    assert not result.found
    assert result.verdict == "inconclusive"
    assert result.points is None
    assert result.residual > 1e-6


def test_warm_start_is_tried_first() -> None:
    seed_set = perm_invariant_equilateral(lp(2.0, 2))
    cfg = SearchConfig(
        norm=lp(2.0, 2),
        m=3,
        restarts=1,
        max_sweeps=1,
        warm_start=seed_set.points,
        warm_distance=math.sqrt(2.0),
    )
    result = search_equilateral(cfg)
    assert result.restarts == 2
    assert result.found


def test_warm_start_shape_is_checked() -> None:
    cfg = SearchConfig(norm=lp(2.0, 2), m=3, restarts=1, warm_start=np.zeros((2, 2)))
    with pytest.raises(DimensionError):
        search_equilateral(cfg)


def test_result_does_not_depend_on_threads() -> None:
    serial = search_equilateral(SearchConfig(norm=lp(3.0, 2), m=3, restarts=8, threads=1), seed=5)
    pooled = search_equilateral(SearchConfig(norm=lp(3.0, 2), m=3, restarts=8, threads=4), seed=5)
    assert serial.found == pooled.found
    assert serial.residual == pooled.residual
    assert serial.best_restart == pooled.best_restart
    assert serial.points is not None and pooled.points is not None
    np.testing.assert_array_equal(serial.points.points, pooled.points.points)


def test_desk_scale_limit() -> None:
    with pytest.raises(ScaleError):
        SearchConfig(norm=lp(2.0, 8), m=9)


def test_config_validation() -> None:
    with pytest.raises(ParameterError):
        SearchConfig(norm=lp(2.0, 2), m=1)
    with pytest.raises(ParameterError):
        SearchConfig(norm=lp(2.0, 2), m=3, warm_distance=0.0)


def test_finds_unit_square_under_sup_norm() -> None:
    result = search_equilateral(SearchConfig(norm=lp(math.inf, 2), m=4, restarts=32), seed=0)
    assert result.found
    assert result.certificate is not None and result.certificate.passed
    assert result.points is not None
    np.testing.assert_allclose(np.ptp(result.points.points, axis=0), [1.0, 1.0], atol=1e-7)


def test_sup_norm_square_as_warm_start_needs_no_search() -> None:
    square = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
    cfg = SearchConfig(
        norm=lp(math.inf, 2), m=4, restarts=1, max_sweeps=1, warm_start=square, warm_distance=2.0
    )
    result = search_equilateral(cfg)
    assert result.best_restart == 0
    assert result.residual < 1e-16
    assert result.found


def test_loose_threshold_does_not_fake_a_find() -> None:
    cfg = SearchConfig(norm=lp(2.0, 2), m=4, restarts=2, threshold=1e6)
    result = search_equilateral(cfg, seed=3)
    assert not result.found
    assert result.verdict == "inconclusive"
    assert result.certificate is not None
    assert not result.certificate.passed
