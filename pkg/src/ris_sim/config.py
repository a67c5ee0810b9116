"""Run configuration: a single TOML file with tables and scalars.

The schema is versioned and closed: unknown keys anywhere are errors, so a
typo cannot silently change an experiment.  ``RunConfig.from_file`` parses
and validates in one pass and reports offending keys with their table
path.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .models import ConfigurationError, EnergyModel, StateSpace, make_model

__all__ = ["UsageError", "RunConfig", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1


class UsageError(ValueError):
    """Invalid configuration or command-line usage."""


_MODEL_KEYS = {
    "quadratic": {"k", "speed", "center", "energy_offset", "x_o"},
    "double-well": {"rate", "load0", "energy_offset", "x_o"},
    "two-well-2d": {"rate", "ky", "energy_offset", "x_o"},
    "custom-polynomial": {"coefficients", "rate", "energy_offset", "x_o"},
}

_TOP_KEYS = {"schema_version", "seed", "model", "grid", "time", "run", "sweep", "output"}
_GRID_KEYS = {"bounds", "h"}
_TIME_KEYS = {"T", "tau"}
_RUN_KEYS = {"scheme", "mu", "epsilon", "u0", "verify", "tol", "c_tol"}
_SWEEP_KEYS = {"mu_list", "tau_scale", "epsilon", "proxy_h", "verify"}
_OUTPUT_KEYS = {"dir"}


def _require(cond: bool, msg: str):
    if not cond:
        raise UsageError(msg)


def _check_keys(table: dict, allowed: set, where: str):
    unknown = set(table) - allowed
    _require(not unknown, f"unknown key(s) in [{where}]: {', '.join(sorted(unknown))}")


@dataclass
class RunConfig:
    """Validated experiment configuration."""

    model_name: str
    model_params: dict
    bounds: list
    h: float
    T: float
    tau: float
    scheme: str = "energetic"
    mu: float | None = None
    epsilon: float | None = None
    u0: list = field(default_factory=lambda: [0.0])
    verify: list = field(default_factory=list)
    tol: float | None = None
    c_tol: float = 10.0
    mu_list: list = field(default_factory=list)
    tau_scale: float = 5e-3
    sweep_epsilon: float = 1e-2
    proxy_h: float | None = None
    sweep_verify: bool = False
    output_dir: str = "out"
    seed: int = 0

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise UsageError(f"config file not found: {path}")
        with open(path, "rb") as fh:
            try:
                raw = _toml.load(fh)
            except _toml.TOMLDecodeError as e:
                raise UsageError(f"config parse error in {path}: {e}") from None
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        _check_keys(raw, _TOP_KEYS, "top level")
        _require(raw.get("schema_version") == SCHEMA_VERSION,
                 f"schema_version must be {SCHEMA_VERSION}")
        for section in ("model", "grid", "time"):
            _require(section in raw, f"missing required table [{section}]")

        model = dict(raw["model"])
        _require("name" in model, "missing model.name")
        name = model.pop("name")
        _require(name in _MODEL_KEYS,
                 f"model.name must be one of {sorted(_MODEL_KEYS)}, got {name!r}")
        _check_keys(model, _MODEL_KEYS[name], f"model ({name})")

        grid = raw["grid"]
        _check_keys(grid, _GRID_KEYS, "grid")
        _require("bounds" in grid and "h" in grid, "grid needs bounds and h")
        _require(grid["h"] > 0, "grid.h must be positive")

        time = raw["time"]
        _check_keys(time, _TIME_KEYS, "time")
        _require("T" in time and "tau" in time, "time needs T and tau")
        _require(time["T"] > 0, "time.T must be positive")
        _require(time["tau"] > 0, "time.tau must be positive")

        cfg = cls(model_name=name, model_params=model,
                  bounds=grid["bounds"], h=float(grid["h"]),
                  T=float(time["T"]), tau=float(time["tau"]),
                  seed=int(raw.get("seed", 0)))

        run = raw.get("run", {})
        _check_keys(run, _RUN_KEYS, "run")
        cfg.scheme = run.get("scheme", "energetic")
        _require(cfg.scheme in ("energetic", "viscous", "ve"),
                 f"run.scheme must be energetic|viscous|ve, got {cfg.scheme!r}")
        if "mu" in run:
            cfg.mu = float(run["mu"])
        if "epsilon" in run:
            cfg.epsilon = float(run["epsilon"])
        if cfg.scheme == "ve":
            _require(cfg.mu is not None and cfg.mu > 0,
                     "run.mu must be > 0 for the ve scheme")
        if cfg.scheme == "viscous":
            _require(cfg.epsilon is not None and cfg.epsilon > 0,
                     "run.epsilon must be > 0 for the viscous scheme")
        u0 = run.get("u0", [0.0])
        cfg.u0 = [float(x) for x in (u0 if isinstance(u0, list) else [u0])]
        cfg.verify = list(run.get("verify", []))
        for v in cfg.verify:
            _require(v in ("energetic", "bv", "ve"),
                     f"run.verify entries must be energetic|bv|ve, got {v!r}")
        if "tol" in run:
            cfg.tol = float(run["tol"])
            _require(cfg.tol > 0, "run.tol must be positive")
        cfg.c_tol = float(run.get("c_tol", 10.0))

        sweep = raw.get("sweep", {})
        _check_keys(sweep, _SWEEP_KEYS, "sweep")
        cfg.mu_list = [float(x) for x in sweep.get("mu_list", [])]
        _require(cfg.mu_list == sorted(cfg.mu_list), "sweep.mu_list must be sorted")
        _require(all(x > 0 for x in cfg.mu_list), "sweep.mu_list entries must be > 0")
        cfg.tau_scale = float(sweep.get("tau_scale", 5e-3))
        cfg.sweep_epsilon = float(sweep.get("epsilon", 1e-2))
        cfg.proxy_h = float(sweep["proxy_h"]) if "proxy_h" in sweep else None
        cfg.sweep_verify = bool(sweep.get("verify", False))

        output = raw.get("output", {})
        _check_keys(output, _OUTPUT_KEYS, "output")
        cfg.output_dir = str(output.get("dir", "out"))

        cfg._validate_geometry()
        return cfg

    def _validate_geometry(self):
        b = np.asarray(self.bounds, dtype=float)
        if b.ndim == 1:
            b = b[None, :]
        _require(b.ndim == 2 and b.shape[1] == 2, "grid.bounds must be a list of [lo, hi]")
        u0 = np.asarray(self.u0, dtype=float)
        _require(u0.shape[0] == b.shape[0],
                 f"u0 has dim {u0.shape[0]}, bounds have dim {b.shape[0]}")
        _require(bool(np.all(u0 >= b[:, 0]) and np.all(u0 <= b[:, 1])),
                 f"initial datum {self.u0} outside grid bounds")

    # -- builders -----------------------------------------------------------
    def build_model(self) -> EnergyModel:
        try:
            return make_model(self.model_name, T=self.T, **self.model_params)
        except (ConfigurationError, TypeError) as e:
            raise UsageError(f"model construction failed: {e}") from None

    def build_space(self) -> StateSpace:
        try:
            return StateSpace.grid(self.bounds, self.h)
        except ConfigurationError as e:
            raise UsageError(f"grid construction failed: {e}") from None
