"""TOML run configuration.

Tables ``[grid]``, ``[params]``, ``[init]``, ``[observables]`` plus top-level
``output_dir``, ``cadence_steps`` and ``deterministic``. ``params.dim`` is taken
from ``grid.dim``; energies default to ``params.p``. Unknown keys are errors.
See the README for the full schema.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

import tomli

from .energies import EnergySpec
from .initial import InitSpec
from .integrator import NLSParams
from .runs import Observables, RunConfig
from .spectral import GridSpec

__all__ = ["ConfigError", "load_config", "config_from_mapping"]

_TOP = {"grid", "params", "init", "observables", "output_dir", "cadence_steps", "deterministic"}


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field."""


def _fields(cls) -> set[str]:
    return {f.name for f in dataclasses.fields(cls)}


def _check_keys(section: str, d: dict, allowed: set[str]):
    extra = sorted(set(d) - allowed)
    if extra:
        raise ConfigError(f"{section}.{extra[0]}: unknown key (allowed: {', '.join(sorted(allowed))})")


def _build(section: str, fn, d: dict):
    try:
        return fn(**d)
    except TypeError as exc:
        raise ConfigError(f"{section}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{section}: {exc}") from None


def config_from_mapping(raw: dict, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig; ``overrides`` maps dotted keys (``params.dt``) to values."""
    raw = {k: (dict(v) if isinstance(v, dict) else v) for k, v in raw.items()}
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        head, _, tail = key.partition(".")
        if tail:
            raw.setdefault(head, {})[tail] = val
        else:
            raw[head] = val
    _check_keys("config", raw, _TOP)
    for sec in ("grid", "params", "init"):
        if sec not in raw:
            raise ConfigError(f"{sec}: missing table [{sec}]")

    g = raw["grid"]
    _check_keys("grid", g, {"dim", "n", "length"})
    if "dim" not in g or "n" not in g:
        raise ConfigError("grid: needs dim and n")
    grid = _build("grid", GridSpec, g)

    pr = dict(raw["params"])
    _check_keys("params", pr, _fields(NLSParams) - {"dim"})
    pr["dim"] = grid.dim
    params = _build("params", NLSParams, pr)

    ini = dict(raw["init"])
    _check_keys("init", ini, _fields(InitSpec))
    if isinstance(ini.get("background"), list):
        b = ini["background"]
        ini["background"] = complex(b[0], b[1] if len(b) > 1 else 0.0)
    init = _build("init", InitSpec, ini)

    ob = dict(raw.get("observables", {}))
    _check_keys("observables", ob, _fields(Observables))
    energies = []
    for i, e in enumerate(ob.pop("energies", [])):
        e = dict(e)
        _check_keys(f"observables.energies[{i}]", e, _fields(EnergySpec))
        e.setdefault("p", params.p)
        energies.append(_build(f"observables.energies[{i}]", EnergySpec, e))
    if "sobolev" in ob:
        ob["sobolev"] = tuple(ob["sobolev"])
    observables = _build("observables", Observables, {**ob, "energies": tuple(energies)})

    top = {k: raw[k] for k in ("output_dir", "cadence_steps", "deterministic") if k in raw}
    if "output_dir" in top:
        top["output_dir"] = str(top["output_dir"])
    return _build("config", RunConfig, dict(grid=grid, params=params, init=init, observables=observables, **top))


def load_config(path, overrides: dict | None = None) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config: file not found: {path}")
    try:
        raw = tomli.loads(path.read_text())
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config: {path}: {exc}") from None
    return config_from_mapping(raw, overrides)
