"""TOML scenario files: schema validation, object builders and round-trip serialization."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np
import tomli
import tomli_w

from . import functions as fn
from . import geometry as geo
from . import integrator as itg
from . import lcs as lcs_mod
from . import lyapunov as ly
from . import operators as ops
from .errors import NslyapError, SchemaError

# allowed keys per object kind: (required, optional)
SET_KEYS = {
    "whole_space": ({"dim"}, set()),
    "singleton": ({"point"}, set()),
    "polyhedron": ({"G", "h"}, set()),
    "ball": ({"center", "radius"}, set()),
    "box": ({"lo", "hi"}, set()),
    "cone": ({"generators"}, {"apex"}),
    "hull": ({"points"}, {"rays"}),
    "intersection": ({"sets"}, set()),
    "product": ({"parts"}, set()),
}
FUNCTION_KEYS = {
    "quadratic": ({"P"}, {"q", "c"}),
    "affine": ({"q"}, {"c"}),
    "constant": ({"dim"}, {"c"}),
    "norm": ({"weight", "p", "dim"}, set()),
    "max": ({"pieces"}, set()),
    "min": ({"pieces"}, set()),
    "plus_indicator": ({"base", "set"}, set()),
    "indicator": ({"set"}, set()),
    "envelope": ({"base", "delta"}, set()),
}
OPERATOR_KEYS = {
    "zero": ({"dim"}, set()),
    "linear": ({"M"}, set()),
    "normal_cone": ({"set"}, set()),
    "subdiff": ({"phi"}, set()),
    "sum": ({"single", "cone"}, set()),
    "product": ({"blocks"}, set()),
}
TOP_KEYS = {"name", "T", "h", "n_samples", "seed", "variant", "x0", "y", "out",
            "system", "lcs", "candidate", "region", "invariant_set", "rho"}
SECTION_KEYS = {
    "system": ({"operator", "drift"}, set()),
    "drift": ({"F"}, {"b", "nonlinearity", "L_f"}),
    "lcs": ({"A_lin", "B", "C", "D", "x0"}, set()),
    "candidate": ({"V", "W"}, {"a"}),
    "rho": (set(), {"rho_bar", "lam_bar", "ybar", "T_max", "rho_scale"}),
}


class _Validator:
    def __init__(self, text: Optional[str]):
        self.text = text or ""
        self.errors: list = []

    def line_of(self, key):
        pat = re.compile(rf"(^|[\s{{,]){re.escape(str(key))}\s*=")
        for i, line in enumerate(self.text.splitlines(), 1):
            if pat.search(line.split("#")[0]):
                return i
        return None

    def error(self, msg, key=None):
        line = self.line_of(key) if key is not None else None
        self.errors.append(f"line {line}: {msg}" if line else msg)

    def keys(self, d, where, required, optional):
        if not isinstance(d, dict):
            self.error(f"{where}: expected a table")
            return False
        ok = True
        for k in d:
            if k not in required | optional:
                self.error(f"{where}: unknown key '{k}'", k)
                ok = False
        for k in sorted(required - set(d)):
            self.error(f"{where}: missing key '{k}'")
            ok = False
        return ok

    def kinded(self, d, where, table):
        if not isinstance(d, dict) or "kind" not in d:
            self.error(f"{where}: needs a 'kind'")
            return False
        kind = d["kind"]
        if kind not in table:
            self.error(f"{where}: unknown kind '{kind}'", "kind")
            return False
        req, opt = table[kind]
        body = {k: v for k, v in d.items() if k != "kind"}
        ok = self.keys(body, f"{where} ({kind})", req, opt)
        for k, v in body.items():
            sub = f"{where}.{k}"
            if k == "set" or k == "cone":
                ok &= self.kinded(v, sub, SET_KEYS if k == "set" else OPERATOR_KEYS)
            elif k in ("sets", "parts"):
                ok &= all(self.kinded(s, f"{sub}[{i}]", SET_KEYS) for i, s in enumerate(v))
            elif k in ("pieces",):
                ok &= all(self.kinded(s, f"{sub}[{i}]", FUNCTION_KEYS) for i, s in enumerate(v))
            elif k in ("base", "phi"):
                ok &= self.kinded(v, sub, FUNCTION_KEYS)
            elif k in ("single",):
                ok &= self.kinded(v, sub, OPERATOR_KEYS)
            elif k == "blocks":
                ok &= all(self.kinded(s, f"{sub}[{i}]", OPERATOR_KEYS) for i, s in enumerate(v))
        return ok


# ---------------------------------------------------------------------------
# builders


def _arr(v):
    return np.array(v, dtype=float)


def set_from_dict(d: dict) -> geo.ConvexSet:
    k = d["kind"]
    if k == "whole_space":
        return geo.WholeSpace(int(d["dim"]))
    if k == "singleton":
        return geo.Singleton(_arr(d["point"]))
    if k == "polyhedron":
        return geo.Polyhedron(_arr(d["G"]), _arr(d["h"]))
    if k == "ball":
        return geo.Ball(_arr(d["center"]), float(d["radius"]))
    if k == "box":
        return geo.Box(_arr(d["lo"]), _arr(d["hi"]))
    if k == "cone":
        return geo.PolyhedralCone(_arr(d["generators"]), None if "apex" not in d else _arr(d["apex"]))
    if k == "hull":
        return geo.Hull(_arr(d["points"]), None if "rays" not in d else _arr(d["rays"]))
    if k == "intersection":
        return geo.Intersection([set_from_dict(s) for s in d["sets"]])
    if k == "product":
        return geo.Product([set_from_dict(s) for s in d["parts"]])
    raise KeyError(k)


def function_from_dict(d: dict) -> fn.FunctionSpec:
    k = d["kind"]
    if k == "quadratic":
        return fn.Quadratic(_arr(d["P"]), None if "q" not in d else _arr(d["q"]), float(d.get("c", 0.0)))
    if k == "affine":
        return fn.Affine(_arr(d["q"]), float(d.get("c", 0.0)))
    if k == "constant":
        return fn.constant(int(d["dim"]), float(d.get("c", 0.0)))
    if k == "norm":
        return fn.ScaledNorm(float(d["weight"]), int(d["p"]), int(d["dim"]))
    if k == "max":
        return fn.MaxOf([function_from_dict(p) for p in d["pieces"]])
    if k == "min":
        return fn.MinOf([function_from_dict(p) for p in d["pieces"]])
    if k == "plus_indicator":
        return fn.PlusIndicator(function_from_dict(d["base"]), set_from_dict(d["set"]))
    if k == "indicator":
        return fn.indicator(set_from_dict(d["set"]))
    if k == "envelope":
        return fn.Envelope(function_from_dict(d["base"]), float(d["delta"]))
    raise KeyError(k)


def operator_from_dict(d: dict) -> ops.MonotoneOperator:
    k = d["kind"]
    if k == "zero":
        return ops.Zero(int(d["dim"]))
    if k == "linear":
        return ops.Linear(_arr(d["M"]))
    if k == "normal_cone":
        return ops.NormalConeOf(set_from_dict(d["set"]))
    if k == "subdiff":
        return ops.SubdiffOf(function_from_dict(d["phi"]))
    if k == "sum":
        return ops.Sum(operator_from_dict(d["single"]), operator_from_dict(d["cone"]))
    if k == "product":
        return ops.ProductOperator([operator_from_dict(b) for b in d["blocks"]])
    raise KeyError(k)


def drift_from_dict(d: dict) -> itg.AffineDrift:
    return itg.AffineDrift(_arr(d["F"]), None if "b" not in d else _arr(d["b"]),
                           d.get("nonlinearity", "none"))


# ---------------------------------------------------------------------------
# scenario


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    T: float = 1.0
    h: float = 1e-3
    n_samples: int = 100
    seed: int = 0
    variant: str = "ii"
    x0: Optional[list] = None
    y: Optional[list] = None
    out: str = "out"
    system: Optional[dict] = None
    lcs: Optional[dict] = None
    candidate: Optional[dict] = None
    region: Optional[dict] = None
    invariant_set: Optional[dict] = None
    rho: Optional[dict] = None

    def to_dict(self) -> dict:
        return {k: v for k, v in dataclasses.asdict(self).items() if v is not None}

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    # builders -----------------------------------------------------------

    def build_system(self) -> itg.SystemSpec:
        if self.system is not None:
            d = self.system["drift"]
            return itg.SystemSpec(operator_from_dict(self.system["operator"]), drift_from_dict(d),
                                  d.get("L_f"))
        if self.lcs is not None:
            return lcs_mod.lcs_to_inclusion(self.build_lcs())
        raise SchemaError(["scenario has neither [system] nor [lcs]"])

    def build_lcs(self) -> lcs_mod.LCSSystem:
        if self.lcs is None:
            raise SchemaError(["scenario has no [lcs] table"])
        d = self.lcs
        return lcs_mod.LCSSystem(_arr(d["A_lin"]), _arr(d["B"]), _arr(d["C"]), _arr(d["D"]), _arr(d["x0"]))

    def build_candidate(self) -> ly.LyapunovCandidate:
        if self.candidate is None:
            raise SchemaError(["scenario has no [candidate] table"])
        c = self.candidate
        return ly.LyapunovCandidate(function_from_dict(c["V"]), function_from_dict(c["W"]), float(c.get("a", 0.0)))

    def build_region(self) -> geo.ConvexSet:
        if self.region is None:
            raise SchemaError(["scenario has no [region] table"])
        return set_from_dict(self.region)

    def build_invariant_set(self) -> geo.ConvexSet:
        if self.invariant_set is None:
            raise SchemaError(["scenario has no [invariant_set] table"])
        return set_from_dict(self.invariant_set)


def _validate(raw: dict, text: Optional[str]) -> ScenarioConfig:
    v = _Validator(text)
    for k in raw:
        if k not in TOP_KEYS:
            v.error(f"unknown key '{k}'", k)
    for k in ("T", "h"):
        if k in raw and not (isinstance(raw[k], (int, float)) and raw[k] > 0 and math.isfinite(raw[k])):
            v.error(f"{k} must be positive", k)
    if "n_samples" in raw and not (isinstance(raw["n_samples"], int) and raw["n_samples"] > 0):
        v.error("n_samples must be a positive integer", "n_samples")
    if "seed" in raw and not (isinstance(raw["seed"], int) and raw["seed"] >= 0):
        v.error("seed must be a nonnegative integer", "seed")
    if "variant" in raw and raw["variant"] not in ly.VARIANTS:
        v.error(f"variant must be one of {ly.VARIANTS}", "variant")
    if "system" in raw and v.keys(raw["system"], "system", *SECTION_KEYS["system"]):
        v.kinded(raw["system"]["operator"], "system.operator", OPERATOR_KEYS)
        v.keys(raw["system"]["drift"], "system.drift", *SECTION_KEYS["drift"])
        if raw["system"]["drift"].get("nonlinearity", "none") not in ("none", "sat", "tanh"):
            v.error("drift nonlinearity must be none, sat or tanh", "nonlinearity")
    if "lcs" in raw:
        v.keys(raw["lcs"], "lcs", *SECTION_KEYS["lcs"])
    if "candidate" in raw and v.keys(raw["candidate"], "candidate", *SECTION_KEYS["candidate"]):
        v.kinded(raw["candidate"]["V"], "candidate.V", FUNCTION_KEYS)
        v.kinded(raw["candidate"]["W"], "candidate.W", FUNCTION_KEYS)
        if raw["candidate"].get("a", 0) < 0:
            v.error("a must be nonnegative", "a")
    for k in ("region", "invariant_set"):
        if k in raw:
            v.kinded(raw[k], k, SET_KEYS)
    if "rho" in raw and v.keys(raw["rho"], "rho", *SECTION_KEYS["rho"]):
        for k in ("T_max", "rho_scale"):
            if k in raw["rho"] and not raw["rho"][k] > 0:
                v.error(f"rho.{k} must be positive", k)
    if v.errors:
        raise SchemaError(v.errors)
    cfg = ScenarioConfig(**raw)
    # build every object once so structural errors surface at parse time
    try:
        if cfg.system is not None or cfg.lcs is not None:
            cfg.build_system() if cfg.system is not None else cfg.build_lcs()
        if cfg.candidate is not None:
            cfg.build_candidate()
        if cfg.region is not None:
            cfg.build_region()
        if cfg.invariant_set is not None:
            cfg.build_invariant_set()
    except (NslyapError, ValueError, TypeError, KeyError) as exc:
        raise SchemaError([f"invalid scenario: {exc}"]) from exc
    return cfg


def parse_config(source) -> ScenarioConfig:
    """Parse a scenario from a path or from TOML text."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and "=" not in source):
        text = Path(source).read_text()
    else:
        text = str(source)
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise SchemaError([str(exc)]) from exc
    return _validate(raw, text)


def from_dict(raw: dict) -> ScenarioConfig:
    return _validate(dict(raw), None)


def jsonable(obj: Any):
    """Recursively convert to JSON-safe values; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj
