from __future__ import annotations

import os
from collections.abc import Mapping
from dataclasses import dataclass

from eqkit.errors import UsageError

THREADS_ENV = "EQK_THREADS"

DEFAULT_SEED = 0
DEFAULT_NUMERIC_TOL = 1e-9
DEFAULT_EXACT_TOL = 1e-12


@dataclass(frozen=True)
class Settings:
    seed: int = DEFAULT_SEED
    threads: int = 1
    tol: float | None = None

    def tolerance_for(self, *, exact: bool) -> float:
        if self.tol is not None:
            return self.tol
        return DEFAULT_EXACT_TOL if exact else DEFAULT_NUMERIC_TOL


def resolve_threads(flag: int | None, environ: Mapping[str, str] | None = None) -> int:
    """`--threads`, else $EQK_THREADS, else every core."""
    if flag is not None:
        if flag < 1:
            raise UsageError(f"--threads must be >= 1, got {flag}")
        return flag
    env = os.environ if environ is None else environ
    raw = env.get(THREADS_ENV, "").strip()
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
        if value < 1:
            raise UsageError(f"{THREADS_ENV} must be >= 1, got {value}")
        return value
    return os.cpu_count() or 1


def resolve_settings(
    *,
    seed: int | None,
    threads: int | None,
    tol: float | None,
    environ: Mapping[str, str] | None = None,
) -> Settings:
    if tol is not None and not tol > 0.0:
        raise UsageError(f"--tol must be positive, got {tol!r}")
    return Settings(
        seed=DEFAULT_SEED if seed is None else seed,
        threads=resolve_threads(threads, environ),
        tol=tol,
    )
