"""Command-line entry point: ``default-delegation <command> --config run.toml``."""

import argparse
import csv
import dataclasses
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .bargaining import bargain
from .config import ConfigError, RunConfig
from .implementability import (
    check_multi_state,
    maxmin_construct,
    solve_default_two_state,
    two_state_game,
    verify_no_deviation,
)
from .oracle import SEED, grid_bargain, grid_policy_search, mc_expected_swf
from .policy_solver import SolverError, solve
from .statics import compare_fosd, sweep
from .welfare import INEQUITY_SCALE, expected_swf, first_best, swf_eval

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3
COMMANDS = ("bargain", "first-best", "eval", "solve", "check-dd", "maxmin", "sweep", "compare-fosd", "oracle")


def jsonable(obj):
    """Plain JSON types; floats rounded to 12 significant digits, NaN/inf as null."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)
                if not f.name.startswith("_")}
    if isinstance(obj, dict):
        return {("|".join(f"{k:.12g}" for k in key) if isinstance(key, tuple) else str(key)): jsonable(v)
                for key, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(f"{x:.12g}") if math.isfinite(x) else None
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


# ---------------------------------------------------------------- commands

def cmd_bargain(cfg):
    theta = cfg.require("theta")
    delta = cfg.require("delta")
    return bargain(cfg.build_prefs(), delta, cfg.build_policy(), theta)


def cmd_first_best(cfg):
    prefs, params = cfg.build_prefs(), cfg.build_params()
    contract = first_best(prefs, params, cfg.require("theta"))
    out = {"contract": contract}
    if not contract.indeterminate:
        out["breakdown"] = swf_eval(prefs, params, contract)
    return out


def cmd_eval(cfg):
    prefs, params, prior = cfg.build_prefs(), cfg.build_params(), cfg.build_prior()
    value = expected_swf(prefs, params, cfg.build_policy(), prior, cfg.require("delta"))
    return {"expected_welfare": value, "inequity_scale": INEQUITY_SCALE}


def cmd_solve(cfg):
    rep = solve(cfg.build_prefs(), cfg.build_params(), cfg.require("delta"), cfg.build_prior(),
                seed=cfg.seed if cfg.seed is not None else SEED)
    return rep


def cmd_check_dd(cfg):
    prefs, params = cfg.build_prefs(), cfg.build_params()
    delta, states = cfg.require("delta"), cfg.build_states()
    if len(states) == 2 and params.gamma == 0:
        cert = solve_default_two_state(prefs, params, delta, states)
        dev = verify_no_deviation(two_state_game(cert), prefs, delta) if np.isfinite(cert.q_d) else None
        return {"certificate": cert, "deviation": dev}
    return check_multi_state(prefs, params, delta, states)


def cmd_maxmin(cfg):
    return maxmin_construct(cfg.build_prefs(), cfg.build_params(), cfg.require("delta"), cfg.build_states())


def cmd_sweep(cfg):
    opts = cfg.options
    axis = opts.get("axis")
    if axis is None:
        raise ConfigError("options.axis", "required for sweep")
    grid = opts.get("grid")
    if axis == "prior":
        raise ConfigError("options.axis", "prior sweeps are available from the library only")
    return sweep(cfg.build_prefs(), cfg.build_params(), cfg.require("delta"), cfg.build_prior(), axis,
                 grid, workers=opts.get("workers", 1))


def cmd_compare_fosd(cfg):
    if cfg.prior_high is None:
        raise ConfigError("prior_high", "required for compare-fosd")
    return compare_fosd(cfg.build_prefs(), cfg.build_params(), cfg.build_prior("prior"),
                        cfg.build_prior("prior_high"))


def cmd_oracle(cfg):
    opts = cfg.options
    which = opts.get("oracle")
    prefs, delta = cfg.build_prefs(), cfg.require("delta")
    seed = cfg.seed if cfg.seed is not None else SEED
    if which == "bargain":
        return grid_bargain(prefs, delta, cfg.build_policy(), cfg.require("theta"),
                            opts.get("q_points", 201), opts.get("c_points", 201))
    if which == "policy":
        params, prior = cfg.build_params(), cfg.build_prior()
        ref = solve(prefs, params, delta, prior, seed=seed).policy
        return grid_policy_search(prefs, params, delta, prior, opts.get("resolution", 41), reference=ref)
    if which == "mc":
        params, prior, policy = cfg.build_params(), cfg.build_prior(), cfg.build_policy()
        est = mc_expected_swf(prefs, params, delta, policy, prior, opts.get("n", 100000), seed)
        quad = expected_swf(prefs, params, policy, prior, delta)
        return {"estimate": est, "quadrature": quad,
                "discrepancy_in_stderr": abs(est.mean - quad) / est.stderr if est.stderr else None}
    raise ConfigError("options.oracle", "expected 'bargain', 'policy' or 'mc'")


HANDLERS = {
    "bargain": cmd_bargain, "first-best": cmd_first_best, "eval": cmd_eval, "solve": cmd_solve,
    "check-dd": cmd_check_dd, "maxmin": cmd_maxmin, "sweep": cmd_sweep,
    "compare-fosd": cmd_compare_fosd, "oracle": cmd_oracle,
}


# ---------------------------------------------------------------- output

def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}{k}.")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}{i}.")
    else:
        yield prefix[:-1], obj


def render(command, cfg, result, fmt):
    if command == "sweep" and fmt == "csv":
        return result.to_csv()
    payload = {"command": command, "version": __version__, "config": cfg.to_dict(),
               "conventions": {"inequity_scale": INEQUITY_SCALE}, "result": jsonable(result)}
    if fmt == "csv":
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(("key", "value"))
        out.writerows(_flatten(payload["result"]))
        return buf.getvalue()
    return json.dumps(payload, indent=2) + "\n"


def build_parser():
    parser = argparse.ArgumentParser(prog="default-delegation", description=__doc__)
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="TOML run configuration")
    parser.add_argument("--out", help="write output here instead of stdout")
    parser.add_argument("--seed", type=int, help="override the configured seed")
    parser.add_argument("--format", choices=("json", "csv"), help="output format (sweep defaults to csv)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    fmt = args.format or ("csv" if args.command == "sweep" else "json")
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = RunConfig.from_toml(fh.read())
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out = args.out
        result = HANDLERS[args.command](cfg)
    except OSError as exc:
        print(json.dumps({"error": f"cannot read config: {exc}"}), file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(json.dumps({"error": str(exc), "path": exc.path}), file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(json.dumps({"error": str(exc), "diagnostics": jsonable(exc.diagnostics)}), file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return EXIT_SOLVER
    text = render(args.command, cfg, result, fmt)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
