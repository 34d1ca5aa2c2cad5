"""JSON problem configuration shared by the command-line tools.

Example::

    {
      "psi": {"kind": "builtin", "name": "identity"},
      "order": {"alpha1": 0.75, "alpha2": 0.75, "beta": 0.5, "gamma_rule": "standard"},
      "domain": {"a": 1.0, "b": 1.0},
      "f": "u", "phi": "0", "xi": "0",
      "Lf": 1.0,
      "grid": {"nx": 128, "ny": 128, "grading": 2.0},
      "tol": 1e-10, "max_iter": 200,
      "ml_order": "min",
      "uhr": {"weight": "1 + x + y", "psi_sup": null, "c2c3": "paper"},
      "stability": {"epsilon": 0.01, "draws": 20, "seed": 7}
    }

A report written by the tools embeds the resolved configuration under the key
``"config"``; such a report is accepted as a configuration file as well.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from psifrac.darboux import DarbouxProblem
from psifrac.exceptions import ConfigError
from psifrac.exprdsl import as_function, parse
from psifrac.fracops import FracOrder
from psifrac.grid import Grid2D
from psifrac.psi import PsiFunction, from_config as psi_from_config

__all__ = ["ProblemConfig", "load_config", "DEFAULTS"]

DEFAULTS: dict = {
    "psi": {"kind": "builtin", "name": "identity"},
    "order": {"alpha1": 1.0, "alpha2": 1.0, "beta": 1.0, "gamma_rule": "standard"},
    "domain": {"a": 1.0, "b": 1.0},
    "f": "0",
    "phi": "0",
    "xi": "0",
    "phi1": None,
    "Lf": 1.0,
    "tau": None,
    "grid": {"nx": 128, "ny": 128, "grading": 2.0},
    "tol": 1.0e-10,
    "max_iter": 200,
    "ml_order": "min",
    "uhr": {"weight": None, "psi_sup": None, "lambdas": None, "c2c3": "paper"},
    "stability": {"epsilon": 0.01, "draws": 20, "seed": 0},
}

_NESTED = ("psi", "order", "domain", "grid", "uhr", "stability")


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in over.items():
        if key not in base:
            raise ConfigError(f"unknown configuration key {key!r}")
        if key in _NESTED and key != "psi" and isinstance(value, dict):
            for sub in value:
                if sub not in base[key]:
                    raise ConfigError(f"unknown configuration key {key}.{sub!r}")
            out[key].update(value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _expr_text(value, variables) -> str | None:
    if value is None:
        return None
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return repr(float(value))
    if not isinstance(value, str):
        raise ConfigError(f"expected an expression string or number, got {value!r}")
    parse(value, variables)
    return value


@dataclass
class ProblemConfig:
    """A fully resolved configuration document."""

    data: dict

    @classmethod
    def from_dict(cls, raw: dict) -> "ProblemConfig":
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object")
        if "config" in raw and isinstance(raw["config"], dict):
            raw = raw["config"]
        data = _merge(DEFAULTS, raw)
        for key, variables in (
            ("f", ("x", "y", "u", "p", "q")),
            ("phi", ("x",)),
            ("xi", ("y",)),
            ("phi1", ("x",)),
        ):
            data[key] = _expr_text(data[key], variables)
        if isinstance(data["Lf"], str):
            parse(data["Lf"], ("x", "y"))
        if data["uhr"].get("weight") is not None:
            data["uhr"]["weight"] = _expr_text(data["uhr"]["weight"], ("x", "y"))
        cfg = cls(data)
        cfg.order()
        cfg.psi()
        return cfg

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def psi(self) -> PsiFunction:
        return psi_from_config(self.data["psi"])

    def order(self) -> FracOrder:
        o = self.data["order"]
        try:
            return FracOrder(float(o["alpha1"]), float(o["alpha2"]), float(o["beta"]), o["gamma_rule"])
        except (TypeError, KeyError) as exc:
            raise ConfigError(f"invalid order block {o!r}") from exc

    def extents(self) -> tuple[float, float]:
        d = self.data["domain"]
        return float(d["a"]), float(d["b"])

    def grid(self) -> Grid2D:
        a, b = self.extents()
        g = self.data["grid"]
        return Grid2D(a, b, int(g["nx"]), int(g["ny"]), float(g["grading"]))

    def lf_value(self) -> float:
        """``Lf`` as a number; an expression is replaced by its grid supremum."""
        lf = self.data["Lf"]
        if isinstance(lf, str):
            X, Y = self.grid().mesh()
            return float(np.max(as_function(lf, ("x", "y"))(X, Y)))
        return float(lf)

    def problem(self) -> DarbouxProblem:
        a, b = self.extents()
        d = self.data
        tau = d["tau"]
        return DarbouxProblem(
            f=d["f"],
            order=self.order(),
            psi=self.psi(),
            a=a,
            b=b,
            phi=d["phi"],
            xi=d["xi"],
            Lf=self.lf_value(),
            tau=None if tau is None else float(tau),
            phi1=d["phi1"],
        )

    def set(self, dotted: str, value) -> None:
        """Override one value, e.g. ``set("grid.nx", 64)``."""
        keys = dotted.split(".")
        node = self.data
        for k in keys[:-1]:
            node = node[k]
        if keys[-1] not in node:
            raise ConfigError(f"unknown configuration key {dotted!r}")
        node[keys[-1]] = value


def load_config(path: str | Path) -> ProblemConfig:
    """Read and validate a configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError as exc:
        raise ConfigError(f"configuration file not found: {path}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read configuration file {path}: {exc.strerror}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}") from exc
    return ProblemConfig.from_dict(raw)
