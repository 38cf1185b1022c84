from __future__ import annotations

import time
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any

from eqkit import __version__


@dataclass(frozen=True)
class RunManifest:
    """What produced an artifact: enough to replay the numerical part byte for byte."""

    subcommand: str
    inputs: Mapping[str, str] = field(default_factory=dict)
    parameters: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0
    tool_version: str = __version__
    elapsed_seconds: float = 0.0
    heuristic_flags: tuple[str, ...] = ()

    def replay_argv(self) -> list[str]:
        """CLI arguments reproducing the run (inputs and parameters as long flags)."""
        argv = [self.subcommand]
        for key, value in (*self.inputs.items(), *self.parameters.items()):
            if value is None or value is False:
                continue
            flag = "--" + key.replace("_", "-")
            argv.extend([flag] if value is True else [flag, str(value)])
        argv.extend(["--seed", str(self.seed)])
        return argv


class Stopwatch:
    def __init__(self) -> None:
        self._start = time.perf_counter()

    def elapsed(self) -> float:
        return time.perf_counter() - self._start
