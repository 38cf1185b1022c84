"""JSON encoding of norms, Young functions, point sets and reports.

Floats go out through `repr` (shortest round-trip form); non-finite values are written as the
strings "inf", "-inf" and "nan" so every artifact is strict JSON.
"""

from __future__ import annotations

import dataclasses
import json
import math
from collections.abc import Mapping
from pathlib import Path
from typing import Any

import numpy as np

from eqkit.domain.models import EquilateralCertificate, FixedPointSolution, PointSet, point_set
from eqkit.domain.norms import (
    Hyperplane,
    LinftyHyperplane,
    Lp,
    MusielakOrlicz,
    NormSpec,
    Owl,
    PermMix,
    Scaled,
)
from eqkit.domain.young import AffineMix, AffineTail, Indicator, PiecewiseLinear, Power, YoungFunction
from eqkit.errors import UsageError

_NON_FINITE = {"inf": math.inf, "+inf": math.inf, "infinity": math.inf, "-inf": -math.inf, "nan": math.nan}


def plain(obj: Any) -> Any:
    """Recursively turn dataclasses, numpy values and tuples into JSON-ready builtins."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, Mapping):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isfinite(value):
            return value
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(plain(obj), indent=2, allow_nan=False) + "\n"


def loads(text: str, *, source: str = "<input>") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"{source}: malformed JSON: {e.msg}", e.lineno, e.colno) from None


def load_path(path: str | Path) -> Any:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {p}: {e.strerror or e}") from None
    return loads(text, source=str(p))


def _number(value: Any, what: str) -> float:
    if isinstance(value, bool):
        raise UsageError(f"{what} must be a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str) and value.strip().lower() in _NON_FINITE:
        return _NON_FINITE[value.strip().lower()]
    raise UsageError(f"{what} must be a number, got {value!r}")


def _numbers(value: Any, what: str) -> tuple[float, ...]:
    if not isinstance(value, list):
        raise UsageError(f"{what} must be a list of numbers")
    return tuple(_number(v, what) for v in value)


def _single_key(data: Any, what: str) -> tuple[str, dict[str, Any]]:
    if not isinstance(data, dict) or len(data) != 1:
        raise UsageError(f"{what} must be an object with exactly one key naming its kind")
    ((kind, body),) = data.items()
    if not isinstance(body, dict):
        raise UsageError(f"{what} {kind!r} must map to an object")
    return kind, body


def _field(body: Mapping[str, Any], key: str, what: str) -> Any:
    if key not in body:
        raise UsageError(f"{what} is missing {key!r}")
    return body[key]


# -- Young functions ------------------------------------------------------------------------


def encode_young(f: YoungFunction) -> dict[str, Any]:
    match f:
        case Power(p=p):
            return {"power": {"p": p}}
        case Indicator(b=b):
            return {"indicator": {"b": b}}
        case PiecewiseLinear(breakpoints=bps, slopes=slopes, cutoff=cutoff):
            return {"piecewise_linear": {"breakpoints": list(bps), "slopes": list(slopes), "cutoff": cutoff}}
        case AffineMix(base=base, w=w, s=s):
            return {"affine_mix": {"base": encode_young(base), "w": w, "s": s}}
        case AffineTail(head=head, b=b, slope=slope):
            return {"affine_tail": {"head": encode_young(head), "b": b, "slope": slope}}
    raise UsageError(f"cannot encode Young function {f!r}")  # pragma: no cover


def decode_young(data: Any) -> YoungFunction:
    kind, body = _single_key(data, "Young function")
    what = f"Young function {kind!r}"
    match kind:
        case "power":
            return Power(p=_number(_field(body, "p", what), "p"))
        case "indicator":
            return Indicator(b=_number(_field(body, "b", what), "b"))
        case "piecewise_linear":
            cutoff = body.get("cutoff")
            return PiecewiseLinear(
                breakpoints=_numbers(_field(body, "breakpoints", what), "breakpoints"),
                slopes=_numbers(_field(body, "slopes", what), "slopes"),
                cutoff=None if cutoff is None else _number(cutoff, "cutoff"),
            )
        case "affine_mix":
            return AffineMix(
                base=decode_young(_field(body, "base", what)),
                w=_number(_field(body, "w", what), "w"),
                s=_number(_field(body, "s", what), "s"),
            )
        case "affine_tail":
            return AffineTail(
                head=decode_young(_field(body, "head", what)),
                b=_number(_field(body, "b", what), "b"),
                slope=_number(_field(body, "slope", what), "slope"),
            )
    raise UsageError(f"unknown Young function kind {kind!r}")


# -- norms ----------------------------------------------------------------------------------


def encode_norm(spec: NormSpec) -> dict[str, Any]:
    family: dict[str, Any]
    match spec.family:
        case Lp(p=p):
            family = {"lp": {"p": p}}
        case MusielakOrlicz(functions=fs, gauge=gauge):
            family = {"musielak_orlicz": {"gauge": gauge, "functions": [encode_young(f) for f in fs]}}
        case Owl(w=w):
            family = {"owl": {"w": list(w)}}
        case PermMix(p=p, alpha=alpha, beta=beta):
            family = {"perm_mix": {"p": p, "alpha": alpha, "beta": beta}}
        case LinftyHyperplane(a=a):
            family = {"linfty_hyperplane": {"a": list(a)}}
        case Scaled(base=base, matrix=matrix):
            family = {"scaled": {"base": encode_norm(base), "matrix": [list(r) for r in matrix]}}
        case _:  # pragma: no cover
            raise UsageError(f"cannot encode norm family {spec.family!r}")
    return {"dim": spec.dim, "family": family}


def decode_norm(data: Any) -> NormSpec:
    if not isinstance(data, dict):
        raise UsageError("norm spec must be a JSON object")
    dim = _field(data, "dim", "norm spec")
    if isinstance(dim, bool) or not isinstance(dim, int):
        raise UsageError(f"norm spec 'dim' must be an integer, got {dim!r}")
    kind, body = _single_key(_field(data, "family", "norm spec"), "norm family")
    what = f"norm family {kind!r}"
    match kind:
        case "lp":
            family: Any = Lp(p=_number(_field(body, "p", what), "p"))
        case "musielak_orlicz":
            functions = _field(body, "functions", what)
            if not isinstance(functions, list):
                raise UsageError("musielak_orlicz 'functions' must be a list")
            family = MusielakOrlicz(
                functions=tuple(decode_young(f) for f in functions),
                gauge=body.get("gauge", "luxemburg"),
            )
        case "owl":
            family = Owl(w=_numbers(_field(body, "w", what), "w"))
        case "perm_mix":
            family = PermMix(
                p=_number(_field(body, "p", what), "p"),
                alpha=_number(body.get("alpha", 1.0), "alpha"),
                beta=_number(body.get("beta", 0.0), "beta"),
            )
        case "linfty_hyperplane":
            family = LinftyHyperplane(a=_numbers(_field(body, "a", what), "a"))
        case "scaled":
            rows = _field(body, "matrix", what)
            if not isinstance(rows, list):
                raise UsageError("scaled 'matrix' must be a list of rows")
            family = Scaled(
                base=decode_norm(_field(body, "base", what)),
                matrix=tuple(_numbers(r, "matrix row") for r in rows),
            )
        case _:
            raise UsageError(f"unknown norm family {kind!r}")
    return NormSpec(dim=dim, family=family)


def decode_hyperplane(data: Any) -> Hyperplane:
    """A bare {"a": [...]} or a linfty_hyperplane norm spec."""
    if isinstance(data, dict) and "a" in data and "family" not in data:
        return Hyperplane(_numbers(data["a"], "a"))
    spec = decode_norm(data)
    h = spec.hyperplane
    if h is None:
        raise UsageError("expected a hyperplane or a linfty_hyperplane norm spec")
    return h


# -- artifacts ------------------------------------------------------------------------------


def encode_points(points: PointSet) -> dict[str, Any]:
    norm = points.norm
    return {
        "points": plain(points.points),
        "claimed_distance": points.claimed_distance,
        "norm": {"a": list(norm.a)} if isinstance(norm, Hyperplane) else encode_norm(norm),
        "construction": points.construction,
        "parameters": plain(points.parameters),
    }


def decode_points(data: Any, norm: NormSpec | Hyperplane | None = None) -> PointSet:
    """Point sets read back from `encode_points` output; `norm` overrides the embedded one."""
    if not isinstance(data, dict):
        raise UsageError("point set must be a JSON object")
    rows = _field(data, "points", "point set")
    if not isinstance(rows, list) or not rows:
        raise UsageError("'points' must be a non-empty list of coordinate lists")
    matrix = [_numbers(r, "point") for r in rows]
    if len({len(r) for r in matrix}) != 1:
        raise UsageError("all points must have the same dimension")
    if norm is None:
        embedded = _field(data, "norm", "point set")
        if isinstance(embedded, dict) and "family" not in embedded and "a" in embedded:
            norm = decode_hyperplane(embedded)
        else:
            norm = decode_norm(embedded)
    parameters = data.get("parameters", {})
    return point_set(
        np.array(matrix, dtype=float),
        _number(data.get("claimed_distance", 1.0), "claimed_distance"),
        norm,
        construction=str(data.get("construction", "")),
        parameters=parameters if isinstance(parameters, dict) else {},
    )


def encode_certificate(cert: EquilateralCertificate) -> dict[str, Any]:
    return {
        "m": cert.m,
        "distances": plain(cert.distances),
        "claimed": cert.claimed,
        "tolerance": cert.tolerance,
        "max_relative_deviation": cert.max_relative_deviation,
        "verdict": cert.verdict,
        "heuristic_flags": list(cert.heuristic_flags),
    }


def encode_solution(solution: FixedPointSolution) -> dict[str, Any]:
    return {
        "epsilon": plain(solution.epsilon),
        "residual_inf": solution.residual_inf,
        "iterations": solution.iterations,
        "method": solution.method,
        "trace": plain(solution.trace),
    }
