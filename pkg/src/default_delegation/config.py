"""Run configuration: TOML parsing, validation and model construction."""

import math
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .domain import Policy, Power, Quadratic, Tabulated, TabulatedPrefs, Uniform01, WelfareParams


class ConfigError(ValueError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


NUM, INT, STR, NUMS, TABLE = "number", "integer", "string", "number list", "number table"

SCHEMA = {
    "delta": NUM,
    "theta": NUM,
    "seed": INT,
    "out": STR,
    "preferences": {
        "kind": STR, "revenue": NUM, "y_w": NUM, "y_f": NUM, "worker": NUMS, "firm": NUMS,
        "q_grid": NUMS, "theta_grid": NUMS, "worker_table": TABLE, "firm_table": TABLE,
    },
    "welfare": {"beta": NUM, "gamma": NUM, "alpha": NUM, "externality_q": NUMS, "externality_value": NUMS},
    "prior": {"family": STR, "k": NUM, "theta": NUMS, "cdf": NUMS},
    "prior_high": {"family": STR, "k": NUM, "theta": NUMS, "cdf": NUMS},
    "policy": {"q_min": NUM, "q_max": NUM, "q_d": NUM, "c_d": NUM},
    "states": {"values": NUMS},
    "options": {
        "axis": STR, "grid": NUMS, "workers": INT, "oracle": STR, "q_points": INT, "c_points": INT,
        "resolution": INT, "n": INT, "margin": NUM, "deltas": NUMS, "n_starts": INT,
    },
}

DEFAULTS = {
    "preferences": {"kind": "quadratic", "revenue": 1.0, "y_w": 0.0, "y_f": 0.0,
                    "worker": [1.0, 2.0, 1.0], "firm": [1.0, 0.0, 0.0]},
    "welfare": {"beta": 1.0, "gamma": 0.0, "alpha": 0.5},
    "prior": {"family": "uniform"},
}


def _check(value, kind, path):
    def is_num(v):
        return isinstance(v, (int, float)) and not isinstance(v, bool)

    if kind == NUM:
        if not is_num(value) or not math.isfinite(value):
            raise ConfigError(path, "expected a finite number")
        return float(value)
    if kind == INT:
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(path, "expected an integer")
        return value
    if kind == STR:
        if not isinstance(value, str):
            raise ConfigError(path, "expected a string")
        return value
    if kind == NUMS:
        if not isinstance(value, list) or not all(is_num(v) for v in value):
            raise ConfigError(path, "expected a list of numbers")
        return [float(v) for v in value]
    if kind == TABLE:
        if not isinstance(value, list) or not all(isinstance(r, list) for r in value):
            raise ConfigError(path, "expected a list of number lists")
        return [_check(r, NUMS, f"{path}[{i}]") for i, r in enumerate(value)]
    raise AssertionError(kind)


def _validate(data, schema, prefix=""):
    out = {}
    for key, value in data.items():
        path = f"{prefix}{key}"
        if key not in schema:
            raise ConfigError(path, "unknown key")
        kind = schema[key]
        if isinstance(kind, dict):
            if not isinstance(value, dict):
                raise ConfigError(path, "expected a table")
            out[key] = _validate(value, kind, path + ".")
        else:
            out[key] = _check(value, kind, path)
    return out


@dataclass
class RunConfig:
    preferences: dict
    welfare: dict
    prior: dict
    delta: float = None
    theta: float = None
    prior_high: dict = None
    policy: dict = None
    states: dict = None
    options: dict = field(default_factory=dict)
    out: str = None
    seed: int = None

    @classmethod
    def from_dict(cls, data):
        data = _validate(data, SCHEMA)
        blocks = {k: {**DEFAULTS.get(k, {}), **data.get(k, {})} for k in ("preferences", "welfare", "prior")}
        cfg = cls(**blocks, **{k: v for k, v in data.items() if k not in blocks})
        cfg.check()
        return cfg

    @classmethod
    def from_toml(cls, text):
        try:
            return cls.from_dict(tomllib.loads(text))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("", f"invalid TOML: {exc}") from None

    def to_dict(self):
        out = {"preferences": dict(self.preferences), "welfare": dict(self.welfare), "prior": dict(self.prior)}
        for key in ("delta", "theta", "seed", "out"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        for key in ("prior_high", "policy", "states"):
            if getattr(self, key) is not None:
                out[key] = dict(getattr(self, key))
        if self.options:
            out["options"] = dict(self.options)
        return out

    def check(self):
        if self.delta is not None and not 0 <= self.delta <= 1:
            raise ConfigError("delta", "delta out of range")
        # build eagerly so bad values are reported with their block name
        self.build_prefs()
        self.build_params()
        self.build_prior("prior")
        if self.prior_high is not None:
            self.build_prior("prior_high")
        if self.policy is not None:
            self.build_policy()
        if self.states is not None:
            self.build_states()

    # ------------------------------------------------------------ builders

    def require(self, name):
        value = getattr(self, name)
        if value is None:
            raise ConfigError(name, "required for this command")
        return value

    def build_prefs(self):
        p = self.preferences
        kind = p["kind"]
        try:
            if kind == "quadratic":
                extra = set(p) & {"q_grid", "theta_grid", "worker_table", "firm_table"}
                if extra:
                    raise ConfigError(f"preferences.{sorted(extra)[0]}", "only valid for tabulated preferences")
                return Quadratic(p["revenue"], p["y_w"], p["y_f"], tuple(p["worker"]), tuple(p["firm"]))
            if kind == "tabulated":
                for key in ("q_grid", "theta_grid", "worker_table", "firm_table"):
                    if key not in p:
                        raise ConfigError(f"preferences.{key}", "required for tabulated preferences")
                return TabulatedPrefs(p["q_grid"], p["theta_grid"], p["worker_table"], p["firm_table"],
                                      p["revenue"], p["y_w"], p["y_f"])
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("preferences", str(exc)) from None
        raise ConfigError("preferences.kind", "expected 'quadratic' or 'tabulated'")

    def build_params(self):
        w = self.welfare
        ext = None
        if ("externality_q" in w) != ("externality_value" in w):
            raise ConfigError("welfare.externality_q", "externality_q and externality_value go together")
        if "externality_q" in w:
            ext = (w["externality_q"], w["externality_value"])
        try:
            return WelfareParams(w["beta"], w["gamma"], w["alpha"], ext)
        except ValueError as exc:
            raise ConfigError("welfare", str(exc)) from None

    def build_prior(self, block="prior"):
        p = getattr(self, block)
        fam = p.get("family", "uniform")
        try:
            if fam == "uniform":
                return Uniform01()
            if fam == "power":
                if "k" not in p:
                    raise ConfigError(f"{block}.k", "required for the power family")
                return Power(p["k"])
            if fam == "tabulated":
                for key in ("theta", "cdf"):
                    if key not in p:
                        raise ConfigError(f"{block}.{key}", "required for a tabulated prior")
                return Tabulated(p["theta"], p["cdf"])
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(block, str(exc)) from None
        raise ConfigError(f"{block}.family", "expected 'uniform', 'power' or 'tabulated'")

    def build_policy(self):
        pol = self.require("policy")
        for key in ("q_min", "q_max", "q_d", "c_d"):
            if key not in pol:
                raise ConfigError(f"policy.{key}", "required")
        return Policy(pol["q_min"], pol["q_max"], pol["q_d"], pol["c_d"])

    def build_states(self):
        st = self.require("states")
        if "values" not in st:
            raise ConfigError("states.values", "required")
        vals = st["values"]
        if not vals or any(b <= a for a, b in zip(vals, vals[1:])):
            raise ConfigError("states.values", "states must be non-empty and strictly increasing")
        return tuple(vals)
