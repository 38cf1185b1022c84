from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from eqkit import __version__
from eqkit.config import Settings, resolve_settings
from eqkit.domain.construct import (
    linfty_subspace_equilateral,
    musielak_orlicz_equilateral,
    perm_invariant_equilateral,
    radius_lp,
    subspace_lower_bounds,
)
from eqkit.domain.models import PointSet
from eqkit.domain.norms import LinftyHyperplane, MusielakOrlicz, NormSpec
from eqkit.domain.oracle import SearchConfig, search_equilateral
from eqkit.domain.perturbed import VARIANTS, build_problem, solve_perturbation
from eqkit.domain.smoothness import (
    MIN_BUDGET,
    find_eps0,
    modulus_of_smoothness,
    supporting_functional_symmetric,
)
from eqkit.domain.verify import certify_equilateral
from eqkit.errors import (
    CapabilityError,
    ConstructionError,
    DegenerateInputError,
    DimensionError,
    DomainError,
    EqkitError,
    HypothesisViolation,
    MembershipError,
    NoSolutionError,
    ParameterError,
    ParameterizationAlarm,
    ParameterSelectionError,
    ScaleError,
    SmoothnessBudgetError,
    SolverError,
    UsageError,
)
from eqkit.io.codec import (
    decode_norm,
    decode_points,
    dumps,
    encode_certificate,
    encode_points,
    encode_solution,
    load_path,
    plain,
)
from eqkit.io.manifest import RunManifest, Stopwatch

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_SOLVER = 3

_USAGE_ERRORS: tuple[type[EqkitError], ...] = (
    UsageError,
    DimensionError,
    DegenerateInputError,
    MembershipError,
    ParameterError,
    CapabilityError,
    DomainError,
    ScaleError,
)
_SOLVER_ERRORS: tuple[type[EqkitError], ...] = (
    SolverError,
    ParameterSelectionError,
    SmoothnessBudgetError,
    ParameterizationAlarm,
    HypothesisViolation,
    ConstructionError,
    NoSolutionError,
)

_LOG_HANDLER = "eqkit-cli"

Handler = Callable[[argparse.Namespace, Settings], int]


def _print_error(message: str) -> None:
    print(f"eqkit: {message}", file=sys.stderr)


def _configure_logging(level: str) -> None:
    pkg = logging.getLogger("eqkit")
    for h in list(pkg.handlers):
        if h.get_name() == _LOG_HANDLER:
            pkg.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.set_name(_LOG_HANDLER)
    handler.setFormatter(logging.Formatter("eqkit: %(levelname)s %(name)s: %(message)s"))
    pkg.addHandler(handler)
    pkg.setLevel(level.upper())


def _emit(payload: dict[str, Any], out: str | None) -> None:
    text = dumps(payload)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _manifest(
    args: argparse.Namespace,
    settings: Settings,
    watch: Stopwatch,
    *,
    inputs: dict[str, str],
    parameters: dict[str, Any],
    flags: Sequence[str] = (),
) -> dict[str, Any]:
    manifest = RunManifest(
        subcommand=args.command,
        inputs=inputs,
        parameters=parameters,
        seed=settings.seed,
        tool_version=__version__,
        elapsed_seconds=watch.elapsed(),
        heuristic_flags=tuple(flags),
    )
    return dict(plain(manifest))


def _load_norm(path: str) -> NormSpec:
    return decode_norm(load_path(path))


# -- subcommands ----------------------------------------------------------------------------


def _construct_for(spec: NormSpec, k: int | None) -> tuple[PointSet, bool]:
    """Pick the construction matching the norm family; the flag marks exact arithmetic."""
    if isinstance(spec.family, LinftyHyperplane):
        return linfty_subspace_equilateral(spec, k), True
    if k is not None:
        raise UsageError("--k only applies to linfty_hyperplane norms")
    match spec.family:
        case MusielakOrlicz(gauge="luxemburg"):
            return musielak_orlicz_equilateral(spec), False
    return perm_invariant_equilateral(spec), False


def _cmd_construct(args: argparse.Namespace, settings: Settings) -> int:
    watch = Stopwatch()
    spec = _load_norm(args.norm)
    points, exact = _construct_for(spec, args.k)
    cert = certify_equilateral(points, tol=settings.tolerance_for(exact=exact))
    payload = encode_points(points)
    payload["certificate"] = encode_certificate(cert)
    payload["manifest"] = _manifest(
        args, settings, watch, inputs={"norm": args.norm}, parameters={"k": args.k, "tol": settings.tol}
    )
    _emit(payload, args.out)
    return EXIT_OK if cert.passed else EXIT_FAILED


def _cmd_verify(args: argparse.Namespace, settings: Settings) -> int:
    watch = Stopwatch()
    norm = _load_norm(args.norm) if args.norm else None
    points = decode_points(load_path(args.points), norm)
    exact = isinstance(points.norm, NormSpec) and isinstance(points.norm.family, LinftyHyperplane)
    cert = certify_equilateral(points, tol=settings.tolerance_for(exact=exact))
    payload = encode_certificate(cert)
    inputs = {"points": args.points} | ({"norm": args.norm} if args.norm else {})
    payload["manifest"] = _manifest(args, settings, watch, inputs=inputs, parameters={"tol": settings.tol})
    _emit(payload, None)
    return EXIT_OK if cert.passed else EXIT_FAILED


def _cmd_perturb(args: argparse.Namespace, settings: Settings) -> int:
    watch = Stopwatch()
    base = _load_norm(args.base)
    target = _load_norm(args.target)
    result = solve_perturbation(
        base,
        target,
        args.variant,
        k=args.k,
        budget=args.budget,
        seed=settings.seed,
        samples=args.samples,
        tol=settings.tolerance_for(exact=False),
    )
    payload = encode_points(result.points)
    payload["solution"] = encode_solution(result.solution)
    payload["certificate"] = encode_certificate(result.certificate)
    payload["manifest"] = _manifest(
        args,
        settings,
        watch,
        inputs={"base": args.base, "target": args.target},
        parameters={
            "variant": args.variant,
            "k": args.k,
            "budget": args.budget,
            "samples": args.samples,
            "tol": settings.tol,
        },
        flags=result.problem.heuristic_flags,
    )
    _emit(payload, args.out)
    return EXIT_OK if result.certificate.passed else EXIT_FAILED


def _cmd_radius(args: argparse.Namespace, settings: Settings) -> int:
    watch = Stopwatch()
    if args.base is None:
        if args.p is None or args.n is None:
            raise UsageError("radius needs either --p and --n, or --base and --variant")
        payload: dict[str, Any] = {"p": args.p, "n": args.n, "R": radius_lp(args.p, args.n)}
        inputs: dict[str, str] = {}
        flags: tuple[str, ...] = ()
    else:
        if args.variant is None:
            raise UsageError("--base requires --variant")
        base = _load_norm(args.base)
        problem = build_problem(base, base, args.variant, k=args.k, budget=args.budget, seed=settings.seed)
        payload = {
            "variant": args.variant,
            "R_lower": problem.R,
            "parameters": problem.metadata.get("parameters", {}),
            "heuristic_flags": list(problem.heuristic_flags),
        }
        if args.variant == "subspace":
            payload["bounds"] = subspace_lower_bounds(base)
        inputs = {"base": args.base}
        flags = problem.heuristic_flags
    payload["manifest"] = _manifest(
        args,
        settings,
        watch,
        inputs=inputs,
        parameters={"p": args.p, "n": args.n, "variant": args.variant, "k": args.k, "budget": args.budget},
        flags=flags,
    )
    _emit(payload, None)
    return EXIT_OK


def _cmd_oracle(args: argparse.Namespace, settings: Settings) -> int:
    watch = Stopwatch()
    spec = _load_norm(args.norm)
    warm = None
    warm_distance = 1.0
    if args.warm_start:
        seed_set = decode_points(load_path(args.warm_start), spec)
        warm, warm_distance = np.array(seed_set.points), seed_set.claimed_distance
    cfg = SearchConfig(
        norm=spec,
        m=args.m,
        restarts=args.restarts,
        warm_start=warm,
        warm_distance=warm_distance,
        threads=settings.threads,
    )
    result = search_equilateral(cfg, settings.seed)
    payload: dict[str, Any] = {
        "verdict": result.verdict,
        "residual": result.residual,
        "restarts": result.restarts,
        "best_restart": result.best_restart,
    }
    if result.points is not None and result.certificate is not None:
        payload["points"] = encode_points(result.points)
        payload["certificate"] = encode_certificate(result.certificate)
    inputs = {"norm": args.norm} | ({"warm_start": args.warm_start} if args.warm_start else {})
    payload["manifest"] = _manifest(
        args, settings, watch, inputs=inputs, parameters={"m": args.m, "restarts": args.restarts}
    )
    _emit(payload, args.out)
    return EXIT_OK if result.found else EXIT_FAILED


def _cmd_smoothness(args: argparse.Namespace, settings: Settings) -> int:
    watch = Stopwatch()
    spec = _load_norm(args.norm)
    payload: dict[str, Any] = {
        "t": args.t,
        "rho": modulus_of_smoothness(spec, args.t, args.budget, seed=settings.seed),
        "budget": args.budget,
        "smooth_claimed": spec.is_smooth_claimed,
        "heuristic_flags": ["rho-estimate-only"],
    }
    if args.eps0 or spec.is_smooth_claimed:
        payload["eps0"] = find_eps0(spec, spec.dim, args.budget, seed=settings.seed)
    if spec.is_smooth_claimed and spec.is_symmetric and spec.dim >= 2:
        c, functional = supporting_functional_symmetric(spec)
        payload["supporting_functional"] = {"c": c, "functional": functional}
    payload["manifest"] = _manifest(
        args,
        settings,
        watch,
        inputs={"norm": args.norm},
        parameters={"t": args.t, "budget": args.budget, "eps0": args.eps0},
        flags=("rho-estimate-only",),
    )
    _emit(payload, None)
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for every sampled step (default 0)")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default $EQK_THREADS or all cores)")
    common.add_argument("--tol", type=float, default=None, help="certificate tolerance override")
    common.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="stderr log level",
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="eqkit", description="Equilateral sets in normed spaces.")
    parser.add_argument("--version", action="version", version=f"eqkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", parents=[common], help="construct and certify an equilateral set")
    p.add_argument("--norm", required=True, help="norm spec JSON")
    p.add_argument("--k", type=int, default=None, help="partition size for linfty_hyperplane norms")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.set_defaults(handler=_cmd_construct)

    p = sub.add_parser("verify", parents=[common], help="certify a point set")
    p.add_argument("--points", required=True, help="point set JSON")
    p.add_argument("--norm", default=None, help="norm spec JSON (default: the one embedded in --points)")
    p.set_defaults(handler=_cmd_verify)

    p = sub.add_parser("perturb", parents=[common], help="solve the fixed-point problem for a nearby norm")
    p.add_argument("--base", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--variant", required=True, choices=VARIANTS)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--budget", type=int, default=MIN_BUDGET, help="smoothness sample budget")
    p.add_argument("--samples", type=int, default=1000, help="sandwich samples")
    p.add_argument("--out", default=None)
    p.set_defaults(handler=_cmd_perturb)

    p = sub.add_parser("radius", parents=[common], help="l_p radius formula or R_lower of a base space")
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--base", default=None)
    p.add_argument("--variant", default=None, choices=VARIANTS)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--budget", type=int, default=MIN_BUDGET)
    p.set_defaults(handler=_cmd_radius)

    p = sub.add_parser("oracle", parents=[common], help="random-restart search (desk scale)")
    p.add_argument("--norm", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--restarts", type=int, default=32)
    p.add_argument("--warm-start", default=None, help="point set JSON used as the first start")
    p.add_argument("--out", default=None)
    p.set_defaults(handler=_cmd_oracle)

    p = sub.add_parser("smoothness", parents=[common], help="modulus of smoothness estimate")
    p.add_argument("--norm", required=True)
    p.add_argument("--t", type=float, default=0.1)
    p.add_argument("--budget", type=int, default=MIN_BUDGET)
    p.add_argument("--eps0", action="store_true", help="search the eps0 grid even when the norm is not flagged smooth")
    p.set_defaults(handler=_cmd_smoothness)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    _configure_logging(args.log_level)
    handler: Handler = args.handler
    try:
        settings = resolve_settings(seed=args.seed, threads=args.threads, tol=args.tol)
        return handler(args, settings)
    except UsageError as e:
        where = f" (line {e.line}, column {e.column})" if e.line is not None else ""
        _print_error(f"{e.message}{where}")
        return EXIT_USAGE
    except _USAGE_ERRORS as e:
        _print_error(str(e))
        return EXIT_USAGE
    except _SOLVER_ERRORS as e:
        _print_error(str(e))
        return EXIT_SOLVER
    except EqkitError as e:
        _print_error(f"internal error: {e}")
        return EXIT_SOLVER


def main() -> None:
    try:
        raise SystemExit(run())
    except KeyboardInterrupt:
        raise SystemExit(130)
