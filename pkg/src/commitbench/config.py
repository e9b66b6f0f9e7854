"""Experiment configuration: one YAML or JSON document, overridable by flags.

Schema (every key optional; defaults below)::

    seed: 0                       # master seed, fanned out to named substreams
    output: out                   # output directory
    workers: 1                    # parallel grid cells
    env:
      dir: null                   # CSV environment directory; null -> synthetic
      synthetic: {n_buildings: 1, n_days: 243, ...}   # SyntheticConfig fields
      battery: {capacity: 6.4, ...}                   # BatterySpec fields
    forecast:
      kind: exp_decay             # iid | exp_decay
      sigma: null                 # null -> chosen from target_mae_frac
      target_mae_frac: 0.1        # expected MAE as a fraction of mean load
      a: 0.8
      c: 1.0
      archive: null               # archive CSV, or one per building (simulate only)
      n_scenarios: 20
      noise_scale: 0.1
    policy:
      algorithm: fhc              # fhc | afhc
      horizon: 24
      v_min: 1
      v_max: 12
      v_F: 1                      # simulate only
      v_O: 1
      beta: 0.0
      w_co2: 1.0
      stochastic: false           # sweep also runs the scenario grid
      solver: simplex             # simplex | highs
    bounds: {T: 24, beta: 1, diam: 1, g_lip: 1, alpha: 1, sigma: 1, a: 0.8, c: 1,
             opt_cost: 0, v_max: 24}
"""
from __future__ import annotations

import copy
import json
from dataclasses import fields
from pathlib import Path

import numpy as np
import yaml

from .battery import BatterySpec, SyntheticConfig, make_synthetic_env, read_env
from .bounds import BoundParams
from .errors import ConfigError, SpecError
from .forecast import NoiseModel, ScenarioGenConfig, sigma_for_mae, substream
from .policies import PolicyConfig

DEFAULTS = {
    "seed": 0,
    "output": "out",
    "workers": 1,
    "env": {"dir": None, "synthetic": {}, "battery": {}},
    "forecast": {"kind": "exp_decay", "sigma": None, "target_mae_frac": 0.1, "a": 0.8, "c": 1.0,
                 "archive": None, "n_scenarios": 20, "noise_scale": 0.1},
    "policy": {"algorithm": "fhc", "horizon": 24, "v_min": 1, "v_max": 12, "v_F": 1, "v_O": 1,
               "beta": 0.0, "w_co2": 1.0, "stochastic": False, "solver": "simplex"},
    "bounds": {"T": 24.0, "beta": 1.0, "diam": 1.0, "g_lip": 1.0, "alpha": 1.0, "sigma": 1.0,
               "a": 0.8, "c": 1.0, "opt_cost": 0.0, "v_max": 24},
}


def _merge(base, extra, path=""):
    out = copy.deepcopy(base)
    for key, val in extra.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict) and key not in ("synthetic", "battery"):
            if not isinstance(val, dict):
                raise ConfigError(f"config key {where!r} must be a mapping")
            out[key] = _merge(base[key], val, where + ".")
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(path=None, overrides=None):
    """Defaults, then the file at ``path``, then ``overrides`` (nested dict)."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {p} does not exist")
        text = p.read_text(encoding="utf-8")
        try:
            doc = json.loads(text) if p.suffix == ".json" else yaml.safe_load(text)
        except (json.JSONDecodeError, yaml.YAMLError) as exc:
            raise ConfigError(f"{p}: cannot parse config: {exc}") from None
        if doc is None:
            doc = {}
        if not isinstance(doc, dict):
            raise ConfigError(f"{p}: top level must be a mapping")
        cfg = _merge(cfg, doc)
    if overrides:
        cfg = _merge(cfg, overrides)
    validate(cfg)
    return cfg


def validate(cfg):
    pol = cfg["policy"]
    for key in ("horizon", "v_min", "v_max", "v_F", "v_O"):
        if not isinstance(pol[key], int) or isinstance(pol[key], bool):
            raise ConfigError(f"policy.{key} must be an integer")
    if not 1 <= pol["v_min"] <= pol["v_max"] <= pol["horizon"]:
        raise ConfigError(
            f"need 1 <= v_min <= v_max <= horizon, got {pol['v_min']}..{pol['v_max']} with H={pol['horizon']}")
    if not isinstance(cfg["workers"], int) or cfg["workers"] < 1:
        raise ConfigError("workers must be a positive integer")
    if cfg["env"]["dir"] is not None and not Path(cfg["env"]["dir"]).is_dir():
        raise ConfigError(f"env.dir {cfg['env']['dir']} is not a directory")
    archive = cfg["forecast"]["archive"]
    for path in [archive] if isinstance(archive, str) else (archive or []):
        if not Path(path).is_file():
            raise ConfigError(f"forecast.archive {path} does not exist")
    _known(cfg["env"]["synthetic"], SyntheticConfig, "env.synthetic")
    _known(cfg["env"]["battery"], BatterySpec, "env.battery")


def _known(section, cls, where):
    names = {f.name for f in fields(cls)}
    for key in section:
        if key not in names:
            raise ConfigError(f"unknown config key '{where}.{key}'")


def derived_seed(master, name):
    return int(substream(master, name).integers(2 ** 62))


def battery_spec(cfg):
    return BatterySpec(**cfg["env"]["battery"])


def synthetic_config(cfg):
    syn = dict(cfg["env"]["synthetic"])
    if "peak_hours" in syn:
        syn["peak_hours"] = tuple(syn["peak_hours"])
    syn.setdefault("tail_hours", cfg["policy"]["horizon"])
    syn.setdefault("seed", derived_seed(cfg["seed"], "env"))
    try:
        return SyntheticConfig(battery=battery_spec(cfg), **syn)
    except (TypeError, SpecError) as exc:
        raise ConfigError(f"env.synthetic: {exc}") from None


def build_env(cfg):
    if cfg["env"]["dir"] is not None:
        env = read_env(cfg["env"]["dir"])
        if cfg["env"]["battery"]:
            # a battery section in the config replaces the specs stored with the CSVs
            env = read_env(cfg["env"]["dir"], [battery_spec(cfg)] * env.n_buildings)
        return env
    return make_synthetic_env(synthetic_config(cfg))


def noise_model(cfg, env):
    fc = cfg["forecast"]
    sigma = fc["sigma"]
    if sigma is None:
        mean_load = float(np.mean([b.load.values[:env.scored_hours].mean() for b in env.buildings]))
        sigma = sigma_for_mae(fc["target_mae_frac"] * mean_load, cfg["policy"]["horizon"],
                              fc["kind"], fc["a"], fc["c"])
    return NoiseModel(kind=fc["kind"], sigma=float(sigma), a=fc["a"], c=fc["c"],
                      seed=derived_seed(cfg["seed"], "forecast"))


def scenario_config(cfg):
    fc = cfg["forecast"]
    return ScenarioGenConfig(n_scenarios=fc["n_scenarios"], noise_scale=fc["noise_scale"],
                             seed=derived_seed(cfg["seed"], "scenarios"))


def policy_config(cfg, stochastic=None, **changes):
    pol = cfg["policy"]
    base = dict(algorithm=pol["algorithm"], v_F=pol["v_F"], v_O=pol["v_O"], horizon=pol["horizon"],
                beta=pol["beta"], w_co2=pol["w_co2"],
                stochastic=pol["stochastic"] if stochastic is None else stochastic,
                scenarios=scenario_config(cfg), solver=pol["solver"])
    base.update(changes)
    return PolicyConfig(**base)


def bound_params(cfg):
    b = {k: v for k, v in cfg["bounds"].items() if k != "v_max"}
    return BoundParams(**{k: float(v) for k, v in b.items()}), int(cfg["bounds"]["v_max"])
