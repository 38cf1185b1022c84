from __future__ import annotations

import math

import numpy as np
import pytest

from eqkit.domain.norms import Hyperplane, LinftyHyperplane, NormSpec, lp, musielak_orlicz, scaled
from eqkit.domain.perturbed import (
    PerturbationProblem,
    build_problem,
    check_sandwich,
    phi,
    point_map,
    position_target,
    select_parameters_orlicz,
    select_parameters_subspace,
    select_parameters_symmetric,
    solve_fixed_point,
    solve_perturbation,
    sort_thresholds_first,
)
from eqkit.domain.young import Indicator, Power
from eqkit.errors import (
    CapabilityError,
    DimensionError,
    DomainError,
    HypothesisViolation,
    ParameterError,
    ParameterSelectionError,
    SolverError,
)


def _ones_plane(n: int) -> NormSpec:
    return NormSpec(dim=n, family=LinftyHyperplane((1.0,) * n))


def _subspace_problem() -> PerturbationProblem:
    base = _ones_plane(5)
    return build_problem(base, base, "subspace", k=2, samples=200)


# -- parameter selection --------------------------------------------------------------------


def test_symmetric_parameters_euclidean() -> None:
    params = select_parameters_symmetric(lp(2.0, 3), eps0=1.0 / 16.0)
    c = 1.0 / math.sqrt(2.0)
    assert params.scale == 1.0
    assert params.c == pytest.approx(c)
    assert params.epsilon == pytest.approx(1.0 / 144.0)
    assert params.beta == pytest.approx(1.0 / 48.0)
    assert params.R_lower == pytest.approx(math.hypot(params.gamma + params.beta, params.gamma))
    assert params.R_lower >= 1.0 + (1.0 / 16.0) / 18.0
    assert params.heuristic_flags == ()


def test_symmetric_parameters_estimated_eps0_is_flagged() -> None:
    params = select_parameters_symmetric(lp(2.0, 3))
    assert params.eps0 == 1.0 / 16.0
    assert params.heuristic_flags == ("rho-estimate-only",)


def test_symmetric_parameters_rescale_unit_vectors() -> None:
    params = select_parameters_symmetric(scaled(lp(2.0, 3), 2.0), eps0=1.0 / 16.0)
    assert params.scale == pytest.approx(0.5)


def test_symmetric_parameters_corner_check() -> None:
    with pytest.raises(ParameterSelectionError) as info:
        select_parameters_symmetric(lp(1.2, 3), eps0=1.0)
    assert info.value.diagnostics["corner_norm"] > 1.0


def test_symmetric_parameters_validate_eps0() -> None:
    with pytest.raises(ParameterError):
        select_parameters_symmetric(lp(2.0, 3), eps0=2.0)


def test_symmetric_parameters_need_smoothness() -> None:
    with pytest.raises(CapabilityError):
        select_parameters_symmetric(lp(1.0, 3), eps0=0.5)


def test_orlicz_parameters_squares() -> None:
    params = select_parameters_orlicz([Power(2.0)] * 3)
    c = math.sqrt(0.5)
    assert params.m == 0
    assert params.K == pytest.approx(2.0)
    assert params.epsilon == 0.0625
    assert params.beta == pytest.approx(3.0 * 0.0625)
    assert params.R_lower == pytest.approx(math.hypot(c + 0.125, c - 0.0625), rel=1e-9)


def test_orlicz_parameters_with_threshold_coordinate() -> None:
    params = select_parameters_orlicz([Indicator(1.0), Power(2.0), Power(2.0)])
    assert params.m == 1
    assert params.K == pytest.approx(2.0)
    assert params.epsilon == 0.125
    assert params.centers[0] == 1.0


def test_orlicz_parameters_need_thresholds_first() -> None:
    with pytest.raises(ParameterError):
        select_parameters_orlicz([Power(2.0), Indicator(1.0), Power(2.0)])


def test_orlicz_parameters_need_flat_start() -> None:
    with pytest.raises(HypothesisViolation):
        select_parameters_orlicz([Power(1.0)] * 3)


def test_sort_thresholds_first() -> None:
    ordered, perm = sort_thresholds_first([Power(2.0), Indicator(1.0), Power(3.0)])
    assert perm == (1, 0, 2)
    assert ordered == (Indicator(1.0), Power(2.0), Power(3.0))


def test_subspace_parameters() -> None:
    params = select_parameters_subspace(_ones_plane(5))
    assert params.k == 2
    assert params.m == 3
    assert params.b == (1.0, 1.0)
    assert select_parameters_subspace(Hyperplane((1.0, 1.0, 1.0))).k == 1


def test_subspace_parameters_need_dimension_three() -> None:
    with pytest.raises(ParameterError):
        select_parameters_subspace(Hyperplane((1.0, 1.0)))


# -- problem --------------------------------------------------------------------------------


def test_subspace_point_map_lies_on_hyperplane() -> None:
    problem = _subspace_problem()
    assert problem.points == 3
    assert problem.N == 3
    pts = point_map(problem, np.full(problem.N, 0.5))
    assert np.all(Hyperplane((1.0,) * 5).residuals(pts) <= 1e-12)


def test_subspace_identity_target_is_fixed_at_zero() -> None:
    problem = _subspace_problem()
    np.testing.assert_allclose(phi(problem, np.zeros(problem.N)), 0.0, atol=1e-15)
    solution = solve_fixed_point(problem)
    assert solution.iterations == 1
    assert solution.method == "damped-iteration"


def test_phi_rejects_points_outside_box() -> None:
    problem = _subspace_problem()
    with pytest.raises(DomainError):
        phi(problem, np.full(problem.N, 2.0 * problem.box_beta))
    with pytest.raises(DimensionError):
        point_map(problem, np.zeros(problem.N + 1))


def test_solve_fixed_point_validates_damping() -> None:
    with pytest.raises(ParameterError):
        solve_fixed_point(_subspace_problem(), damping=0.0)


def test_unknown_variant() -> None:
    with pytest.raises(ParameterError):
        build_problem(lp(2.0, 3), lp(2.0, 3), "bogus")  # type: ignore[arg-type]


def test_position_target_and_sandwich() -> None:
    base = lp(2.0, 3)
    target = scaled(lp(2.0, 3), 2.0)
    assert not check_sandwich(base, target, 2.0, 200).passed
    positioned, s = position_target(base, target, samples=200)
    assert s == pytest.approx(2.0)
    report = check_sandwich(base, positioned, 2.0, 200)
    assert report.passed
    assert report.min_ratio == pytest.approx(1.0)


def test_sandwich_euclidean_over_sup() -> None:
    report = check_sandwich(lp(2.0, 3), lp(math.inf, 3), 2.0, 500)
    assert report.passed
    assert report.max_ratio <= math.sqrt(3.0) + 1e-12


# -- end to end -----------------------------------------------------------------------------


def test_symmetric_perturbation_of_itself() -> None:
    result = solve_perturbation(lp(2.0, 3), lp(2.0, 3), "symmetric", samples=200)
    assert result.points.m == 3
    assert result.points.construction == "perturbation-symmetric"
    assert result.certificate.passed
    assert "rho-estimate-only" in result.certificate.heuristic_flags


def test_symmetric_perturbation_of_weighted_l4() -> None:
    delta = 5e-4
    target = scaled(lp(4.0, 3), [1.0, 1.0 + delta, 1.0 - delta])
    result = solve_perturbation(lp(4.0, 3), target, "symmetric", samples=500)
    assert result.certificate.passed
    assert result.solution.residual_inf <= 1e-10
    assert "sandwich-violated" not in result.problem.heuristic_flags


def test_orlicz_perturbation() -> None:
    delta = 0.01
    base = musielak_orlicz([Power(2.0)] * 3)
    target = scaled(base, [1.0, 1.0 + delta, 1.0 - delta])
    result = solve_perturbation(base, target, "orlicz", samples=300)
    assert result.points.construction == "perturbation-orlicz"
    assert result.certificate.passed


def test_subspace_perturbation_of_weighted_sup_norm() -> None:
    base = _ones_plane(5)
    target = scaled(lp(math.inf, 5), [1.0, 1.2, 1.0, 1.0, 1.0])
    result = solve_perturbation(base, target, "subspace", k=2, samples=500)
    assert result.points.m == 3
    assert np.all(Hyperplane((1.0,) * 5).residuals(result.points.points) <= 1e-9)
    assert result.certificate.passed


def _configured_problem(variant: str) -> PerturbationProblem:
    if variant == "symmetric":
        l4 = lp(4.0, 3)
        return build_problem(l4, scaled(l4, [1.0, 1.0005, 0.9995]), "symmetric", samples=500)
    if variant == "orlicz":
        squares = musielak_orlicz([Power(2.0)] * 3)
        return build_problem(squares, scaled(squares, [1.0, 1.01, 0.99]), "orlicz", samples=300)
    target = scaled(lp(math.inf, 5), [1.0, 1.2, 1.0, 1.0, 1.0])
    return build_problem(_ones_plane(5), target, "subspace", k=2, samples=500)


@pytest.mark.parametrize("variant", ["symmetric", "orlicz", "subspace"])
def test_phi_maps_the_box_into_itself(variant: str) -> None:
    problem = _configured_problem(variant)
    beta = problem.box_beta
    rng = np.random.default_rng(11)
    for eps in rng.uniform(0.0, beta, size=(1000, problem.N)):
        out = phi(problem, eps)
        assert out.min() >= -1e-12
        assert out.max() <= beta + 1e-12


def test_diagonal_perturbations_of_l4_within_radius() -> None:
    radii = {n: select_parameters_symmetric(lp(4.0, n)).R_lower for n in (3, 4, 5)}
    successes = 0
    for seed in range(20):
        n = 3 + seed % 3
        base = lp(4.0, n)
        rng = np.random.default_rng(seed)
        weights = 1.0 + 0.2 * (radii[n] - 1.0) * rng.uniform(-1.0, 1.0, size=n)
        try:
            result = solve_perturbation(base, scaled(base, weights), "symmetric", samples=300)
        except SolverError:
            continue
        assert result.points.m == n
        successes += result.certificate.passed
    assert successes >= 19
