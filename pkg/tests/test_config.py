from __future__ import annotations

import os

import pytest

from eqkit.config import THREADS_ENV, Settings, resolve_settings, resolve_threads
from eqkit.errors import UsageError
from eqkit.io.manifest import RunManifest


def test_threads_flag_wins() -> None:
    assert resolve_threads(2, {THREADS_ENV: "7"}) == 2


def test_threads_from_environment() -> None:
    assert resolve_threads(None, {THREADS_ENV: " 3 "}) == 3


def test_threads_default_to_cores() -> None:
    assert resolve_threads(None, {}) == (os.cpu_count() or 1)


@pytest.mark.parametrize("raw", ["zero", "0", "-2"])
def test_threads_environment_is_validated(raw: str) -> None:
    with pytest.raises(UsageError):
        resolve_threads(None, {THREADS_ENV: raw})


def test_threads_flag_is_validated() -> None:
    with pytest.raises(UsageError):
        resolve_threads(0)


def test_tolerance_selection() -> None:
    assert Settings().tolerance_for(exact=True) == 1e-12
    assert Settings().tolerance_for(exact=False) == 1e-9
    assert Settings(tol=1e-6).tolerance_for(exact=True) == 1e-6


def test_resolve_settings_defaults() -> None:
    s = resolve_settings(seed=None, threads=None, tol=None, environ={THREADS_ENV: "1"})
    assert s == Settings(seed=0, threads=1, tol=None)


def test_resolve_settings_rejects_bad_tolerance() -> None:
    with pytest.raises(UsageError):
        resolve_settings(seed=1, threads=1, tol=0.0)


def test_manifest_replay_argv() -> None:
    manifest = RunManifest(
        subcommand="construct",
        inputs={"norm": "norm.json"},
        parameters={"k": 2, "tol": None, "eps0": True, "warm_start": False},
        seed=3,
    )
    assert manifest.replay_argv() == ["construct", "--norm", "norm.json", "--k", "2", "--eps0", "--seed", "3"]
