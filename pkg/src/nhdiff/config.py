"""Experiment configuration: JSON parsing and validation.

A config document is a single JSON object; the "command" value selects the
experiment and must match the CLI subcommand.  Unknown keys are rejected so
typos fail loudly before any computation starts.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .core import InitialCondition, load_matrix_file
from .errors import ConfigError
from .observables import GridSpec, default_grid

COMMANDS = ("simulate", "solve", "aecp", "kernel", "asympt", "compare")

_TOP_KEYS = {
    "command", "initial", "n", "tau_list", "trials", "seed", "grid",
    "output_dir", "extras",
}
_REQUIRED = {
    "simulate": ("initial", "n", "tau_list", "seed"),
    "solve": ("initial", "tau_list"),
    "aecp": ("initial", "n"),
    "kernel": (),
    "asympt": (),
    "compare": ("tau_list",),
}
_EXTRA_KEYS = {
    "simulate": set(),
    "solve": set(),
    "aecp": {"z", "r", "tau", "scan", "residual_points"},
    "kernel": {"n_kernel", "tau"},
    "asympt": {"families", "n", "t"},
    "compare": {"families"},
}
DEFAULT_TRIALS = 6  # matches the reference simulation ensembles


@dataclass
class ExperimentConfig:
    command: str
    initial: InitialCondition | None
    n: int
    tau_list: tuple
    trials: int
    seed: int
    grid: GridSpec | None
    output_dir: str
    extras: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def grid_or_default(self) -> GridSpec:
        if self.grid is not None:
            return self.grid
        tau_max = max(self.tau_list) if self.tau_list else 1.0
        return default_grid(tau_max)


def _parse_complex(value, where: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if (
        isinstance(value, (list, tuple))
        and len(value) == 2
        and all(isinstance(v, (int, float)) for v in value)
    ):
        return complex(value[0], value[1])
    raise ConfigError(f"{where}: expected a number or [re, im] pair, got {value!r}")


def _parse_initial(obj, base_dir: str) -> InitialCondition:
    if not isinstance(obj, dict):
        raise ConfigError("initial: expected an object with a 'kind' key")
    allowed = {"kind", "a", "alpha", "path"}
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"initial: unknown keys {sorted(unknown)}")
    kind = obj.get("kind")
    if kind == "zero":
        return InitialCondition.zero()
    if kind == "spiric":
        if "a" not in obj:
            raise ConfigError("initial: spiric kind requires 'a'")
        return InitialCondition.spiric(_parse_complex(obj["a"], "initial.a"))
    if kind == "jordan":
        if "alpha" not in obj:
            raise ConfigError("initial: jordan kind requires 'alpha'")
        return InitialCondition.jordan(_parse_complex(obj["alpha"], "initial.alpha"))
    if kind == "explicit":
        if "path" not in obj:
            raise ConfigError("initial: explicit kind requires 'path'")
        path = obj["path"]
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        try:
            return InitialCondition.explicit(load_matrix_file(path))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"initial.path: {exc}") from exc
    raise ConfigError(
        f"initial.kind: expected one of zero/spiric/jordan/explicit, got {kind!r}"
    )


def _parse_grid(obj) -> GridSpec:
    if not isinstance(obj, dict):
        raise ConfigError("grid: expected an object")
    keys = {"x_min", "x_max", "y_min", "y_max", "nx", "ny"}
    unknown = set(obj) - keys
    if unknown:
        raise ConfigError(f"grid: unknown keys {sorted(unknown)}")
    missing = keys - set(obj)
    if missing:
        raise ConfigError(f"grid: missing keys {sorted(missing)}")
    try:
        return GridSpec(
            x_min=float(obj["x_min"]), x_max=float(obj["x_max"]),
            y_min=float(obj["y_min"]), y_max=float(obj["y_max"]),
            nx=int(obj["nx"]), ny=int(obj["ny"]),
        )
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from exc


def parse_config(text: str, base_dir: str = ".") -> ExperimentConfig:
    """Parse and validate a JSON experiment configuration.

    Raises ConfigError with the JSON location for malformed documents and
    with the offending field name for invalid values.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")
    command = doc.get("command")
    if command not in COMMANDS:
        raise ConfigError(
            f"command: expected one of {', '.join(COMMANDS)}, got {command!r}"
        )
    for key in _REQUIRED[command]:
        if key not in doc:
            raise ConfigError(f"missing required key '{key}' for command {command}")

    initial = _parse_initial(doc["initial"], base_dir) if "initial" in doc else None

    n = doc.get("n", 64)
    if not isinstance(n, int) or n < 1:
        raise ConfigError(f"n: expected a positive integer, got {n!r}")

    tau_list = doc.get("tau_list", (1.0,))
    if (
        not isinstance(tau_list, (list, tuple))
        or not tau_list
        or not all(isinstance(t, (int, float)) for t in tau_list)
    ):
        raise ConfigError(f"tau_list: expected a non-empty list of numbers")
    taus = tuple(float(t) for t in tau_list)
    if taus[0] <= 0 or any(b <= a for a, b in zip(taus, taus[1:])):
        raise ConfigError("tau_list: must be strictly increasing and positive")

    trials = doc.get("trials", DEFAULT_TRIALS)
    if not isinstance(trials, int) or trials < 1:
        raise ConfigError(f"trials: expected a positive integer, got {trials!r}")

    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or seed < 0 or seed >= 2**64:
        raise ConfigError(f"seed: expected an unsigned 64-bit integer, got {seed!r}")

    grid = _parse_grid(doc["grid"]) if "grid" in doc else None

    output_dir = doc.get("output_dir", ".")
    if not isinstance(output_dir, str):
        raise ConfigError(f"output_dir: expected a string, got {output_dir!r}")

    extras = doc.get("extras", {})
    if not isinstance(extras, dict):
        raise ConfigError("extras: expected an object")
    unknown = set(extras) - _EXTRA_KEYS[command]
    if unknown:
        raise ConfigError(f"extras: unknown keys {sorted(unknown)} for command {command}")

    if command == "simulate" and initial.kind == "spiric" and n % 2 != 0:
        raise ConfigError("n: spiric initial condition needs even n")

    return ExperimentConfig(
        command=command, initial=initial, n=n, tau_list=taus, trials=trials,
        seed=seed, grid=grid, output_dir=output_dir, extras=extras, raw=doc,
    )
