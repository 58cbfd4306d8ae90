"""Run configuration: a JSON document validated against a schema, with defaults filled in."""
from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from .collision import KernelParams, SphereQuadrature, VelocityGrid
from .lp import FourierGrid
from .solver import INITIAL_KINDS, LOSS_COUPLINGS, SolverConfig
from .verify import FIELD_CLASSES, TrialSpec, VerifyGrids

CONFIG_VERSION = "1"

DEFAULTS = {
    "version": CONFIG_VERSION,
    "seed": 0,
    "output": "kblab_out",
    "grids": {"spatial_dim": 1, "points_per_axis": 64, "domain_length": 2.0 * math.pi,
              "velocity": {"half_width": 4.55, "points_per_axis": 7}, "sphere_nodes": 26},
    "kernel": {"gamma": 1.0, "bound_constant": 1.0, "interpolation_order": 3, "gamma_order": 1},
    "solver": {"method": "direct", "initial": "random", "dt": 5e-3, "T": 1.0, "amplitude": 1e-3, "k_max": 2.0,
               "spectral_decay": 2.0, "velocity_degree": 2, "gamma_rtol": 1e-6, "conservative": True,
               "loss_coupling": "lagged", "picard_max": 6, "store_every": 1, "blowup": 1e6,
               "snapshots": False},
    "trials": {"n_trials": 100, "spectral_decay": 2.0, "amplitude": 1e-3, "field_class": "general",
               "k_max": 4.0, "velocity_degree": 2, "n_times": 5, "horizon": 0.1, "dt": 1e-2,
               "refine_trials": 10},
    "verify": {"spatial_dim": 1, "points_per_axis": 32, "velocity": [4.55, 7], "linear_velocity": [6.0, 12],
               "refined_velocity": [4.5, 9], "refined_linear_velocity": [6.0, 16], "sphere_nodes": 26,
               "gamma": 1.0, "gamma_order": 1},
}

_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_INT = {"type": "integer"}
_POW2 = {"type": "integer", "minimum": 8}
_VEL = {"type": "object", "additionalProperties": False,
        "properties": {"half_width": _POS, "points_per_axis": {"type": "integer", "minimum": 2}}}
_PAIR = {"type": "array", "items": [_POS, {"type": "integer", "minimum": 2}], "minItems": 2, "maxItems": 2}
_ORDER = {"enum": [1, 3]}


def _section(props: dict) -> dict:
    return {"type": "object", "additionalProperties": False, "properties": props}


SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "additionalProperties": False,
    "required": ["version"],
    "properties": {
        "version": {"type": "string", "const": CONFIG_VERSION},
        "seed": {"type": "integer", "minimum": 0},
        "output": {"type": "string", "minLength": 1},
        "grids": _section({"spatial_dim": {"enum": [1, 2, 3]}, "points_per_axis": _POW2,
                           "domain_length": _POS, "velocity": _VEL,
                           "sphere_nodes": {"type": "integer", "minimum": 2}}),
        "kernel": _section({"gamma": {"type": "number", "minimum": 0, "maximum": 1}, "bound_constant": _NONNEG,
                            "interpolation_order": _ORDER, "gamma_order": _ORDER}),
        "solver": _section({"method": {"enum": ["direct", "picard"]}, "initial": {"enum": list(INITIAL_KINDS)},
                            "dt": _POS, "T": _POS, "amplitude": _NONNEG, "k_max": _POS, "spectral_decay": _POS,
                            "velocity_degree": {"type": "integer", "minimum": 0},
                            "gamma_rtol": {"type": "number", "minimum": 0, "maximum": 1},
                            "conservative": {"type": "boolean"}, "loss_coupling": {"enum": list(LOSS_COUPLINGS)},
                            "picard_max": {"type": "integer", "minimum": 1},
                            "store_every": {"type": "integer", "minimum": 1},
                            "blowup": {"type": "number", "minimum": 1}, "snapshots": {"type": "boolean"}}),
        "trials": _section({"n_trials": {"type": "integer", "minimum": 1}, "spectral_decay": _POS,
                            "amplitude": _NONNEG, "field_class": {"enum": list(FIELD_CLASSES)}, "k_max": _POS,
                            "velocity_degree": {"type": "integer", "minimum": 0},
                            "n_times": {"type": "integer", "minimum": 1}, "horizon": _POS, "dt": _POS,
                            "refine_trials": {"type": "integer", "minimum": 0}}),
        "verify": _section({"spatial_dim": {"enum": [1, 2, 3]}, "points_per_axis": _POW2, "velocity": _PAIR,
                            "linear_velocity": _PAIR, "refined_velocity": _PAIR,
                            "refined_linear_velocity": _PAIR, "sphere_nodes": {"type": "integer", "minimum": 2},
                            "gamma": {"type": "number", "minimum": 0, "maximum": 1}, "gamma_order": _ORDER}),
    },
}


class ConfigError(ValueError):
    """Configuration that fails the schema or a semantic check."""


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        out[key] = _merge(out[key], val) if isinstance(val, dict) and isinstance(out.get(key), dict) else val
    return out


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration with every default filled in (``data``)."""

    data: dict

    @classmethod
    def from_dict(cls, raw) -> "RunConfig":
        try:
            jsonschema.validate(raw, SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"invalid config at {where}: {exc.message}") from None
        cfg = cls(_merge(DEFAULTS, raw))
        try:  # semantic checks live in the domain constructors
            cfg.fourier_grid(), cfg.velocity_grid(), cfg.sphere(), cfg.kernel()
            cfg.solver_config(), cfg.trial_spec(), cfg.verify_grids().level()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from None
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_dict(raw)

    def with_seed(self, seed: int | None) -> "RunConfig":
        return self if seed is None else RunConfig.from_dict(_merge(self.data, {"seed": seed}))

    def with_trials(self, n: int | None) -> "RunConfig":
        return self if n is None else RunConfig.from_dict(_merge(self.data, {"trials": {"n_trials": n}}))

    def canonical(self) -> str:
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"))

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    @property
    def seed(self) -> int:
        return self.data["seed"]

    # domain objects --------------------------------------------------------
    def fourier_grid(self) -> FourierGrid:
        g = self.data["grids"]
        return FourierGrid(g["spatial_dim"], g["points_per_axis"], float(g["domain_length"]))

    def velocity_grid(self) -> VelocityGrid:
        v = self.data["grids"]["velocity"]
        return VelocityGrid(float(v["half_width"]), v["points_per_axis"])

    def sphere(self) -> SphereQuadrature:
        return SphereQuadrature(self.data["grids"]["sphere_nodes"])

    def kernel(self) -> KernelParams:
        k = self.data["kernel"]
        return KernelParams(float(k["gamma"]), bound_constant=float(k["bound_constant"]))

    def tables(self):
        from .collision import build_tables
        k = self.data["kernel"]
        return build_tables(self.velocity_grid(), self.sphere(), self.kernel(),
                            interpolation_order=k["interpolation_order"], gamma_order=k["gamma_order"])

    def solver_config(self) -> SolverConfig:
        s = self.data["solver"]
        return SolverConfig(dt=float(s["dt"]), T=float(s["T"]), amplitude=float(s["amplitude"]),
                            picard_max=s["picard_max"], seed=self.seed, loss_coupling=s["loss_coupling"],
                            gamma_rtol=float(s["gamma_rtol"]), conservative=s["conservative"],
                            store_every=s["store_every"], blowup=float(s["blowup"]))

    def trial_spec(self) -> TrialSpec:
        t = self.data["trials"]
        return TrialSpec(seed=self.seed, **{k: (float(v) if isinstance(v, float) else v) for k, v in t.items()})

    def verify_grids(self) -> VerifyGrids:
        v = dict(self.data["verify"])
        for key in ("velocity", "linear_velocity", "refined_velocity", "refined_linear_velocity"):
            v[key] = (float(v[key][0]), int(v[key][1]))
        v["gamma"] = float(v["gamma"])
        return VerifyGrids(**v)
