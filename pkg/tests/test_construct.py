from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from eqkit.domain.construct import (
    linfty_subspace_equilateral,
    minimal_exact_k,
    minimal_perturbed_k,
    musielak_orlicz_equilateral,
    perm_invariant_equilateral,
    radius_lp,
    subspace_lower_bounds,
    valid_exact_k,
)
from eqkit.domain.norms import (
    Hyperplane,
    NormSpec,
    Owl,
    PermMix,
    lp,
    musielak_orlicz,
    norm_eval,
    scaled,
)
from eqkit.domain.verify import EXACT_TOL, certify_equilateral
from eqkit.domain.young import Indicator, PiecewiseLinear, Power, YoungFunction
from eqkit.errors import CapabilityError, ParameterError


def test_perm_invariant_euclidean() -> None:
    pts = perm_invariant_equilateral(lp(2.0, 3))
    assert pts.m == 4
    assert pts.claimed_distance == pytest.approx(math.sqrt(2.0))
    assert pts.construction == "permutation-invariant"
    assert certify_equilateral(pts).passed


def test_perm_invariant_owl() -> None:
    spec = NormSpec(dim=3, family=Owl(w=(2.0, 1.0, 1.0)))
    assert certify_equilateral(perm_invariant_equilateral(spec)).passed


def test_perm_invariant_l1_plane() -> None:
    pts = perm_invariant_equilateral(lp(1.0, 2))
    assert pts.parameters["t0"] == pytest.approx(1.5)
    assert certify_equilateral(pts).passed


def test_perm_invariant_requires_flag() -> None:
    with pytest.raises(CapabilityError):
        perm_invariant_equilateral(scaled(lp(2.0, 3), [1.0, 2.0, 3.0]))


def test_perm_invariant_requires_dimension_two() -> None:
    with pytest.raises(ParameterError):
        perm_invariant_equilateral(lp(2.0, 1))


@settings(max_examples=30, deadline=None)
@given(st.floats(1.0, 10.0), st.integers(2, 6))
def test_perm_invariant_lp_certifies(p: float, n: int) -> None:
    pts = perm_invariant_equilateral(lp(p, n))
    assert pts.m == n + 1
    assert certify_equilateral(pts).passed


def test_musielak_orlicz_linear_functions() -> None:
    pts = musielak_orlicz_equilateral([Power(1.0)] * 3)
    assert pts.construction == "musielak-orlicz"
    assert pts.parameters["strategy"] == "level-path"
    np.testing.assert_allclose(pts.parameters["centers"], [0.5, 0.5, 0.5])
    np.testing.assert_allclose(pts.parameters["t"], [0.5, 0.5, 0.5], atol=1e-9)
    assert certify_equilateral(pts).passed


def test_musielak_orlicz_mixed_powers() -> None:
    spec = musielak_orlicz([Power(2.0), Power(2.0), Power(3.0), Power(1.5)])
    pts = musielak_orlicz_equilateral(spec)
    assert pts.m == 5
    assert pts.parameters["regularization"] is None
    assert certify_equilateral(pts).passed


def test_musielak_orlicz_all_indicators() -> None:
    pts = musielak_orlicz_equilateral([Indicator(1.0)] * 3)
    assert pts.parameters["strategy"] == "threshold-pin"
    np.testing.assert_allclose(pts.points[-1], [1.0, 1.0, 1.0])
    assert certify_equilateral(pts).passed


def test_musielak_orlicz_pins_an_indicator_between_kinked_and_power() -> None:
    fs = [
        PiecewiseLinear(breakpoints=(0.4593, 1.1223), slopes=(1.8425, 3.7294)),
        Indicator(1.7724),
        Power(3.1923),
    ]
    pts = musielak_orlicz_equilateral(fs)
    assert pts.parameters["strategy"] == "single-threshold-pin"
    assert pts.parameters["regularization"] is None
    assert pts.parameters["t"][1] == 1.7724
    assert certify_equilateral(pts, tol=1e-9).passed


def _random_young(rng: np.random.Generator) -> YoungFunction:
    kind = int(rng.integers(3))
    if kind == 0:
        return Power(round(float(rng.uniform(1.0, 4.0)), 4))
    if kind == 1:
        return Indicator(round(float(rng.uniform(0.5, 2.0)), 4))
    b0 = round(float(rng.uniform(0.0, 1.0)), 4)
    s0 = round(float(rng.uniform(0.5, 2.0)), 4)
    return PiecewiseLinear(
        breakpoints=(b0, b0 + round(float(rng.uniform(0.1, 1.0)), 4)),
        slopes=(s0, s0 + round(float(rng.uniform(0.0, 2.0)), 4)),
    )


@pytest.mark.parametrize("seed", range(25))
def test_musielak_orlicz_random_mixed_families(seed: int) -> None:
    rng = np.random.default_rng(seed)
    n = 3 + seed % 8
    fs = [_random_young(rng) for _ in range(n)]
    pts = musielak_orlicz_equilateral(fs)
    assert pts.m == n + 1
    assert certify_equilateral(pts, musielak_orlicz(fs), tol=1e-9).passed


def test_musielak_orlicz_rejects_small_dimension() -> None:
    with pytest.raises(ParameterError):
        musielak_orlicz_equilateral([Power(2.0)] * 2)


def test_musielak_orlicz_rejects_other_families() -> None:
    with pytest.raises(CapabilityError):
        musielak_orlicz_equilateral(lp(2.0, 3))


def test_partition_validity() -> None:
    assert not valid_exact_k((1.0, 1.0, 1.0), 1)
    assert valid_exact_k((1.0, 1.0, 1.0), 2)
    assert minimal_exact_k((1.0, 1.0, 1.0, 1.0)) == 2
    assert minimal_perturbed_k((1.0, 1.0, 1.0, 1.0, 1.0)) == 2
    assert minimal_perturbed_k((1.0, 1.0)) is None


def test_linfty_subspace_small() -> None:
    pts = linfty_subspace_equilateral(Hyperplane((1.0, 1.0, 1.0)))
    assert pts.parameters["k"] == 2
    np.testing.assert_allclose(pts.points, [[1.0, -0.5, -0.5], [-1.0, 0.5, 0.5]])
    assert certify_equilateral(pts, tol=EXACT_TOL).passed


def test_linfty_subspace_cube() -> None:
    pts = linfty_subspace_equilateral([1.0] * 6)
    assert pts.m == 8
    assert pts.claimed_distance == 2.0
    assert certify_equilateral(pts, tol=EXACT_TOL).passed


def test_linfty_subspace_restores_signs_and_order() -> None:
    a = (0.5, -2.0, 1.0, 3.0)
    pts = linfty_subspace_equilateral(a)
    assert pts.m == 4
    h = Hyperplane(a)
    assert np.all(h.residuals(pts.points) <= 1e-12)
    assert certify_equilateral(pts, tol=EXACT_TOL).passed


def test_linfty_subspace_rejects_invalid_k() -> None:
    with pytest.raises(ParameterError):
        linfty_subspace_equilateral((1.0, 1.0, 1.0), k=1)


def test_linfty_subspace_rejects_other_norms() -> None:
    with pytest.raises(CapabilityError):
        linfty_subspace_equilateral(lp(2.0, 3))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=2, max_size=6))
def test_linfty_subspace_meets_guarantee(coeffs: list[int]) -> None:
    assume(any(coeffs))
    pts = linfty_subspace_equilateral([float(c) for c in coeffs])
    assert pts.m >= 2 ** (len(coeffs) // 2)
    assert certify_equilateral(pts, tol=EXACT_TOL).passed


def test_subspace_lower_bounds() -> None:
    bounds = subspace_lower_bounds((1.0, 1.0, 1.0, 1.0, 1.0))
    assert bounds.exact_k == 3
    assert bounds.exact_size == 4
    assert bounds.exact_guarantee == 4
    assert bounds.perturbed_k == 2
    assert bounds.perturbed_size == 3
    assert bounds.perturbed_guarantee == 3


def test_radius_lp_euclidean_closed_form() -> None:
    assert radius_lp(2.0, 3) == pytest.approx(math.sqrt(1.0 + math.sqrt(0.5)), rel=1e-9)


def test_radius_lp_rejects_bad_arguments() -> None:
    with pytest.raises(ParameterError):
        radius_lp(1.0, 3)
    with pytest.raises(ParameterError):
        radius_lp(2.0, 2)


@settings(max_examples=30, deadline=None)
@given(st.floats(1.1, 10.0), st.integers(3, 10))
def test_radius_lp_at_least_one(p: float, n: int) -> None:
    assert radius_lp(p, n) >= 1.0 - 1e-12


def _radius_on_grid(p: float, n: int, points: int) -> float:
    theta = np.exp(np.linspace(-40.0, 10.0, points))
    ratio = (1.0 + (1.0 + theta) ** p) / (2.0 + (n - 2) * theta**p)
    return float(np.max(ratio) ** (1.0 / p))


def test_radius_lp_matches_dense_grid() -> None:
    assert radius_lp(2.0, 10_000) == pytest.approx(_radius_on_grid(2.0, 10_000, 1_000_000), rel=1e-9)
    assert radius_lp(3.0, 100) == pytest.approx(_radius_on_grid(3.0, 100, 1_000_000), rel=1e-9)


def test_radius_lp_asymptotics() -> None:
    n = 10_000
    assert (radius_lp(2.0, n) - 1.0) * n == pytest.approx(0.25, rel=0.2)
    assert 1.0 < radius_lp(2.0, 100) < 1.01


@settings(max_examples=30, deadline=None)
@given(st.floats(1.5, 6.0), st.integers(3, 40))
def test_radius_lp_decreases_in_n(p: float, n: int) -> None:
    assert radius_lp(p, n + 1) <= radius_lp(p, n) + 1e-12


def _perm_invariant_specs(n: int) -> list[NormSpec]:
    weights = tuple(1.0 / (i + 1) for i in range(n))
    return [
        *(lp(p, n) for p in (1.0, 1.5, 2.0, 3.0, math.inf)),
        NormSpec(dim=n, family=Owl(w=weights)),
        NormSpec(dim=n, family=PermMix(p=3.0, alpha=1.0, beta=0.5)),
    ]


@pytest.mark.parametrize("n", [3, 5, 8, 16])
def test_perm_invariant_bracket_inequality(n: int) -> None:
    for spec in _perm_invariant_specs(n):
        eye = np.eye(n)
        c = norm_eval(spec, eye[0] - eye[1])
        start = np.full(n, 1.0 / n)
        start[0] -= 1.0
        assert norm_eval(spec, start) <= (n - 1) / n * c * (1.0 + 1e-12)
        assert certify_equilateral(perm_invariant_equilateral(spec), tol=1e-9).passed
