"""Run configuration: a versioned JSON document and its dataclass mirror.

Schema v1::

    {
      "schema_version": 1,
      "profile": {"family": "gaussian_bump", "params": {"beta": 0.3, "width": 1.0}},
      "half_width": 0.2,                      # or {"rho_fraction": 0.4}
      "numerics": {...},                      # every key optional, see Numerics
      "sweep": {...},                         # only for the sweep command
      "seed": 0
    }

Table profiles use ``{"family": "table", "path": "k.csv"}``; the path is
resolved against the config file's directory.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields

from ..errors import ConfigError

SCHEMA_VERSION = 1
FAMILIES = ("flat", "gaussian_bump", "table")
COMMANDS = ("validate", "invariants", "certify", "solve", "sweep", "report")


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {type(obj).__name__}")
    extra = set(obj) - set(allowed)
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")


def _positive(value, name, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
        raise ConfigError(f"{name} must be a positive number, got {value!r}")
    return float(value)


def _positive_list(values, name, allow_none=False):
    if values is None and allow_none:
        return None
    if not isinstance(values, (list, tuple)) or not values:
        raise ConfigError(f"{name} must be a non-empty list")
    return tuple(_positive(v, f"{name}[]") for v in values)


@dataclass(frozen=True)
class ProfileSpec:
    family: str
    params: dict = field(default_factory=dict)
    path: str | None = None

    @classmethod
    def from_dict(cls, d):
        _check_keys(d, ("family", "params", "path"), "profile")
        fam = d.get("family")
        if fam not in FAMILIES:
            raise ConfigError(f"profile.family must be one of {FAMILIES}, got {fam!r}")
        params = dict(d.get("params") or {})
        if fam == "gaussian_bump":
            _check_keys(params, ("beta", "width"), "profile.params")
            if "beta" not in params or "width" not in params:
                raise ConfigError("gaussian_bump needs params beta and width")
            if isinstance(params["beta"], bool) or not isinstance(params["beta"], (int, float)):
                raise ConfigError("profile.params.beta must be a number")
            params = {"beta": float(params["beta"]), "width": _positive(params["width"], "profile.params.width")}
        elif params:
            raise ConfigError(f"profile family {fam!r} takes no params")
        path = d.get("path")
        if fam == "table":
            if not isinstance(path, str) or not path:
                raise ConfigError("table profile needs a path")
        elif path is not None:
            raise ConfigError("path is only valid for table profiles")
        return cls(fam, params, path)

    def to_dict(self):
        d = {"family": self.family}
        if self.params:
            d["params"] = dict(self.params)
        if self.path is not None:
            d["path"] = self.path
        return d


@dataclass(frozen=True)
class Numerics:
    # meridian RK4 step; the Jacobi residual scales as h^4
    h: float = 0.01
    # meridian window; None picks max(50 w, 100 a, 2 s_decay)
    s_max: float | None = None
    # asymptotic-flatness tolerance on |k| at the window edge (A3)
    flat_tol: float = 1e-2
    # resolution of the boundary self-intersection test (A1); None = 2 h
    a1_resolution: float | None = None
    # cutoff parameters of the trial family, decreasing
    sigmas: tuple = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4)
    # Gauss-Legendre points across the layer for the Q3 quadrature
    n_u_quad: int = 32
    # eigensolver ladder: n_u of the coarsest mesh, number of 2x refinements
    mesh_n_u0: int = 8
    mesh_levels: int = 3
    # truncation ladder; None picks [S, 2S] with S = max(20 a, 10 R, 10)
    truncations: tuple | None = None
    eig_count: int = 3
    angular_modes: tuple = (0,)
    # bound-state margin below (pi/2a)^2; None = 2 x the discretisation uncertainty
    margin: float | None = None

    @classmethod
    def from_dict(cls, d):
        d = d or {}
        names = [f.name for f in fields(cls)]
        _check_keys(d, names, "numerics")
        kw = {}
        for k, v in d.items():
            if k in ("h", "flat_tol"):
                kw[k] = _positive(v, f"numerics.{k}")
            elif k in ("s_max", "a1_resolution", "margin"):
                kw[k] = _positive(v, f"numerics.{k}", allow_none=True)
            elif k == "sigmas":
                vals = _positive_list(v, "numerics.sigmas")
                if list(vals) != sorted(vals, reverse=True):
                    raise ConfigError("numerics.sigmas must be decreasing")
                kw[k] = vals
            elif k == "truncations":
                kw[k] = _positive_list(v, "numerics.truncations", allow_none=True)
                if kw[k] is not None and len(kw[k]) < 2:
                    raise ConfigError("numerics.truncations needs at least 2 values")
            elif k == "angular_modes":
                if not isinstance(v, (list, tuple)) or not v or any(
                    isinstance(x, bool) or not isinstance(x, int) or x < 0 for x in v
                ):
                    raise ConfigError("numerics.angular_modes must be a list of integers >= 0")
                kw[k] = tuple(int(x) for x in v)
            else:
                if isinstance(v, bool) or not isinstance(v, int) or v <= 0:
                    raise ConfigError(f"numerics.{k} must be a positive integer")
                kw[k] = int(v)
        out = cls(**kw)
        if out.mesh_levels < 3:
            raise ConfigError("numerics.mesh_levels must be at least 3")
        if out.mesh_n_u0 < 8:
            raise ConfigError("numerics.mesh_n_u0 must be at least 8")
        return out

    def to_dict(self):
        d = asdict(self)
        for k in ("sigmas", "truncations", "angular_modes"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d


@dataclass(frozen=True)
class SweepSpec:
    beta: tuple
    width: tuple
    rho_fraction: tuple | None = None
    half_width: tuple | None = None
    probe: bool = True

    @classmethod
    def from_dict(cls, d):
        _check_keys(d, ("beta", "width", "rho_fraction", "half_width", "probe"), "sweep")
        beta = d.get("beta")
        if not isinstance(beta, (list, tuple)) or not beta or any(
            isinstance(b, bool) or not isinstance(b, (int, float)) for b in beta
        ):
            raise ConfigError("sweep.beta must be a non-empty list of numbers")
        width = _positive_list(d.get("width"), "sweep.width")
        rf = _positive_list(d.get("rho_fraction"), "sweep.rho_fraction", allow_none=True)
        hw = _positive_list(d.get("half_width"), "sweep.half_width", allow_none=True)
        if (rf is None) == (hw is None):
            raise ConfigError("sweep needs exactly one of rho_fraction and half_width")
        if rf is not None and any(f >= 1 for f in rf):
            raise ConfigError("sweep.rho_fraction entries must be below 1")
        probe = d.get("probe", True)
        if not isinstance(probe, bool):
            raise ConfigError("sweep.probe must be a boolean")
        return cls(tuple(float(b) for b in beta), width, rf, hw, probe)

    def to_dict(self):
        d = {"beta": list(self.beta), "width": list(self.width), "probe": self.probe}
        if self.rho_fraction is not None:
            d["rho_fraction"] = list(self.rho_fraction)
        if self.half_width is not None:
            d["half_width"] = list(self.half_width)
        return d

    def points(self):
        """Grid points in a fixed order: beta outermost, then width, then a."""
        avals = self.rho_fraction if self.rho_fraction is not None else self.half_width
        key = "rho_fraction" if self.rho_fraction is not None else "value"
        return [
            {"beta": b, "width": w, "half_width": {key: f} if key == "rho_fraction" else f}
            for b in self.beta
            for w in self.width
            for f in avals
        ]


@dataclass(frozen=True)
class RunConfig:
    profile: ProfileSpec
    half_width: object  # float or {"rho_fraction": f}
    numerics: Numerics = field(default_factory=Numerics)
    sweep: SweepSpec | None = None
    command: str | None = None
    seed: int = 0
    base_dir: str = field(default=".", compare=False)

    @classmethod
    def from_dict(cls, d, base_dir="."):
        _check_keys(d, ("schema_version", "profile", "half_width", "numerics", "sweep", "command", "seed"), "config")
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(f"schema_version must be {SCHEMA_VERSION}")
        if "profile" not in d:
            raise ConfigError("config needs a profile")
        profile = ProfileSpec.from_dict(d["profile"])
        sweep = SweepSpec.from_dict(d["sweep"]) if d.get("sweep") is not None else None
        if "half_width" not in d and sweep is None:
            raise ConfigError("config needs half_width")
        hw = d.get("half_width")
        if isinstance(hw, dict):
            _check_keys(hw, ("rho_fraction",), "half_width")
            f = _positive(hw.get("rho_fraction"), "half_width.rho_fraction")
            if f >= 1:
                raise ConfigError("half_width.rho_fraction must be below 1")
            hw = {"rho_fraction": f}
        elif hw is not None:
            hw = _positive(hw, "half_width")
        cmd = d.get("command")
        if cmd is not None and cmd not in COMMANDS:
            raise ConfigError(f"command must be one of {COMMANDS}")
        seed = d.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ConfigError("seed must be an integer")
        return cls(profile, hw, Numerics.from_dict(d.get("numerics")), sweep, cmd, seed, base_dir)

    def to_dict(self):
        d = {
            "schema_version": SCHEMA_VERSION,
            "profile": self.profile.to_dict(),
            "numerics": self.numerics.to_dict(),
            "seed": self.seed,
        }
        if self.half_width is not None:
            d["half_width"] = dict(self.half_width) if isinstance(self.half_width, dict) else self.half_width
        if self.sweep is not None:
            d["sweep"] = self.sweep.to_dict()
        if self.command is not None:
            d["command"] = self.command
        return d

    def table_path(self):
        if self.profile.path is None:
            return None
        p = self.profile.path
        return p if os.path.isabs(p) else os.path.join(self.base_dir, p)

    def content_hash(self, command):
        """Digest of everything that determines a run's numbers."""
        payload = {"config": self.to_dict(), "command": command}
        payload["config"].pop("command", None)
        tp = self.table_path()
        if tp is not None:
            with open(tp, "rb") as fh:
                payload["table_sha256"] = hashlib.sha256(fh.read()).hexdigest()
        return hashlib.sha256(canonical_json(payload).encode()).hexdigest()


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def load_config(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    cfg = RunConfig.from_dict(raw, base_dir=os.path.dirname(os.path.abspath(path)))
    tp = cfg.table_path()
    if tp is not None and not os.path.isfile(tp):
        raise ConfigError(f"table file not found: {tp}")
    return cfg
