"""Persisted, resumable simulation runs.

A run directory holds

* ``manifest.json``: configuration echo, code version, identities in text form;
* ``series.ndjson``: one JSON record per sample, appended as the run advances;
* ``checkpoint.npz``: the state at the last record, used to resume;
* ``diagnostic.json`` / ``diagnostic.npz``: only after an aborted run.
"""

from __future__ import annotations

import json
import math
import os
import platform
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from . import calculus as sym
from .energies import EnergySpec, energy, even_identity_expr, odd_identity_expr
from .initial import InitSpec, make_initial
from .integrator import NLSParams, Stepper
from .spectral import GridSpec, SpectralField, hamiltonian, mass, sobolev_norm

__all__ = [
    "Observables",
    "RunConfig",
    "TimeSeriesRecord",
    "RunResult",
    "RunAborted",
    "run_experiment",
    "read_series",
    "read_manifest",
    "config_from_manifest",
    "run_from_manifest",
]

MANIFEST_FORMAT = "nlsgrowth-run/1"


@dataclass(frozen=True)
class Observables:
    mass: bool = True
    hamiltonian: bool = True
    sobolev: tuple[float, ...] = (1.0, 2.0)
    energies: tuple[EnergySpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "sobolev", tuple(float(s) for s in self.sobolev))
        object.__setattr__(
            self,
            "energies",
            tuple(e if isinstance(e, EnergySpec) else EnergySpec(**e) for e in self.energies),
        )

    def names(self) -> list[str]:
        out = []
        if self.mass:
            out.append("mass")
        if self.hamiltonian:
            out.append("hamiltonian")
        out += [sobolev_name(s) for s in self.sobolev]
        out += [e.name for e in self.energies]
        if len(set(out)) != len(out):
            raise ValueError(f"duplicate observable names: {out}")
        return out

    def evaluate(self, u: SpectralField, p: float) -> dict[str, float]:
        vals = {}
        if self.mass:
            vals["mass"] = mass(u)
        if self.hamiltonian:
            vals["hamiltonian"] = hamiltonian(u, p)
        for s in self.sobolev:
            vals[sobolev_name(s)] = sobolev_norm(u, s)
        for e in self.energies:
            vals[e.name] = energy(u, e)
        return vals

    def to_dict(self) -> dict:
        return {
            "mass": self.mass,
            "hamiltonian": self.hamiltonian,
            "sobolev": list(self.sobolev),
            "energies": [e.to_dict() for e in self.energies],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Observables":
        d = dict(d)
        d["energies"] = tuple(EnergySpec(**e) for e in d.get("energies", ()))
        d["sobolev"] = tuple(d.get("sobolev", (1.0, 2.0)))
        return cls(**d)


def sobolev_name(s: float) -> str:
    return f"H{float(s):g}"


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec
    params: NLSParams
    init: InitSpec
    observables: Observables = field(default_factory=Observables)
    cadence_steps: int = 1
    output_dir: str = "runs/run"
    deterministic: bool = True

    def __post_init__(self):
        if self.grid.dim != self.params.dim:
            raise ValueError(f"grid.dim={self.grid.dim} does not match params.dim={self.params.dim}")
        if self.cadence_steps < 1:
            raise ValueError(f"cadence_steps must be >= 1, got {self.cadence_steps}")
        for e in self.observables.energies:
            if float(e.p) != float(self.params.p):
                raise ValueError(f"observables.energies: {e.name} has p={e.p} but params.p={self.params.p}")
        self.observables.names()
        self.params.n_steps

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "params": self.params.to_dict(),
            "init": self.init.to_dict(),
            "observables": self.observables.to_dict(),
            "cadence_steps": self.cadence_steps,
            "output_dir": str(self.output_dir),
            "deterministic": self.deterministic,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(
            grid=GridSpec.from_dict(d["grid"]),
            params=NLSParams(**d["params"]),
            init=InitSpec.from_dict(d["init"]),
            observables=Observables.from_dict(d.get("observables", {})),
            cadence_steps=int(d.get("cadence_steps", 1)),
            output_dir=str(d.get("output_dir", "runs/run")),
            deterministic=bool(d.get("deterministic", True)),
        )

    def with_output_dir(self, path) -> "RunConfig":
        return RunConfig(self.grid, self.params, self.init, self.observables, self.cadence_steps, str(path), self.deterministic)


@dataclass(frozen=True)
class TimeSeriesRecord:
    step: int
    t: float
    values: dict[str, float]

    def __post_init__(self):
        bad = [k for k, v in self.values.items() if not math.isfinite(v)]
        if bad:
            raise ValueError(f"non-finite observables at t={self.t}: {bad}")

    def to_json(self) -> str:
        # json writes floats with repr, which round-trips exactly
        return json.dumps({"step": self.step, "t": self.t, **self.values}, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "TimeSeriesRecord":
        d = json.loads(line)
        step, t = int(d.pop("step")), float(d.pop("t"))
        return cls(step, t, {k: float(v) for k, v in d.items()})


@dataclass
class RunResult:
    path: Path
    records: list[TimeSeriesRecord]
    resumed_from: int | None = None

    def series(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        t = np.array([r.t for r in self.records])
        return t, np.array([r.values[name] for r in self.records])


class RunAborted(RuntimeError):
    """Run stopped on a non-finite state or observable; ``diagnostic`` names the record."""

    def __init__(self, message: str, diagnostic: Path):
        super().__init__(f"{message} (diagnostic: {diagnostic})")
        self.diagnostic = diagnostic


def identity_texts(cfg: RunConfig) -> dict[str, str]:
    """Symbolic identities relevant to ``cfg`` in text form."""
    dim, p = cfg.params.dim, cfg.params.p
    out = {}
    if float(p).is_integer() and int(p) % 2 == 1:
        p = int(p)
        u, ub = sym.var(dim), sym.var(dim, conj=True)
        out["d/dt u"] = sym.pretty(sym.dt_power(1, p, dim))
        out["d/dt mass"] = sym.pretty(sym.dt_of_functional(u * ub, p))
        grad2 = sum((a * b for a, b in zip(u.grad(), ub.grad())), sym.const(dim, 0))
        pot = (u * ub) ** ((p + 1) // 2) * sym.const(dim, Fraction(2, p + 1))
        out["d/dt hamiltonian"] = sym.pretty(sym.dt_of_functional(grad2 + pot, p))
    else:
        out["d/dt u"] = "i (Lap u - |u|^(p-1) u)"
    for e in cfg.observables.energies:
        if e.kind == "even":
            out[f"d/dt {e.name}"] = sym.pretty(even_identity_expr(e.k, e.p, dim))
        elif e.kind == "odd":
            out[f"d/dt {e.name}"] = sym.pretty(odd_identity_expr(e.p, dim))
        else:
            out[f"d/dt {e.name}"] = (
                "(p-1)(p-3) int |u|^(p-2) d_t|u| |grad|u||^2, "
                f"|u| regularized as sqrt(|u|^2 + {e.eps_reg:g}^2) in denominators"
            )
    return out


def _manifest(cfg: RunConfig, u0: SpectralField) -> dict:
    stepper = Stepper(cfg.grid, cfg.params.p, cfg.params.dt, cfg.params.integrator, cfg.params.dealias, cfg.params.transform)
    with np.errstate(over="ignore", invalid="ignore"):
        initial = {"mass": mass(u0), "hamiltonian": hamiltonian(u0, cfg.params.p)}
    m = {
        "format": MANIFEST_FORMAT,
        "code_version": __version__,
        "numpy_version": np.__version__,
        "python_version": platform.python_version(),
        "config": cfg.to_dict(),
        "resolved": {"transform": stepper.tr.kind, "n_steps": cfg.params.n_steps},
        "observables": cfg.observables.names(),
        "initial": initial,
        "identities": identity_texts(cfg),
    }
    if not cfg.deterministic:
        m["created"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    return m


def _write_atomic(path: Path, data: bytes):
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _save_checkpoint(path: Path, step: int, c: np.ndarray):
    tmp = path.with_name("checkpoint.tmp.npz")
    np.savez(tmp, step=np.int64(step), coeffs=c)
    os.replace(tmp, path)


def read_manifest(run_dir) -> dict:
    return json.loads((Path(run_dir) / "manifest.json").read_text())


def config_from_manifest(run_dir_or_manifest) -> RunConfig:
    m = run_dir_or_manifest
    if not isinstance(m, dict):
        m = read_manifest(m)
    if m.get("format") != MANIFEST_FORMAT:
        raise ValueError(f"unknown manifest format {m.get('format')!r}")
    return RunConfig.from_dict(m["config"])


def read_series(run_dir) -> list[TimeSeriesRecord]:
    path = Path(run_dir) / "series.ndjson"
    if not path.exists():
        return []
    out = []
    for line in path.read_text().splitlines():
        if line.strip():
            out.append(TimeSeriesRecord.from_json(line))
    return out


def _abort(out: Path, reason: str, step: int, t: float, last_step: int | None, last: np.ndarray | None, extra=None) -> RunAborted:
    diag = {"reason": reason, "step": step, "t": t, "last_finite_step": last_step}
    if extra:
        diag.update(extra)
    path = out / "diagnostic.json"
    _write_atomic(path, (json.dumps(diag, indent=2) + "\n").encode())
    if last is not None:
        np.savez(out / "diagnostic.npz", step=np.int64(last_step), coeffs=last)
    return RunAborted(reason, path)


def run_experiment(cfg: RunConfig, resume: bool = True) -> RunResult:
    """Run ``cfg`` into ``cfg.output_dir``, resuming an earlier partial run.

    Resuming requires the stored manifest's config to equal ``cfg``. Records
    are appended one line at a time; the checkpoint trails the last record.
    Raises :class:`RunAborted` on a non-finite state or observable after
    writing ``diagnostic.json`` (and ``diagnostic.npz`` with the last finite
    state).
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    mpath, spath, cpath = out / "manifest.json", out / "series.ndjson", out / "checkpoint.npz"
    p, dt = cfg.params.p, cfg.params.dt
    n_total = cfg.params.n_steps

    records: list[TimeSeriesRecord] = []
    start_step, c, resumed = 0, None, None
    if resume and mpath.exists():
        stored = read_manifest(out)
        if stored.get("config") != json.loads(json.dumps(cfg.to_dict())):
            raise ValueError(f"{mpath} was written for a different configuration")
        records = read_series(out)
        if records and cpath.exists():
            with np.load(cpath) as ck:
                ck_step, ck_c = int(ck["step"]), np.array(ck["coeffs"])
            # crash between a record and its checkpoint: drop the orphan records
            records = [r for r in records if r.step <= ck_step]
            if records and records[-1].step == ck_step:
                start_step, c, resumed = ck_step, ck_c, ck_step
                spath.write_text("".join(r.to_json() + "\n" for r in records))
        if c is None:
            records = []
    if c is None:
        for f in (spath, cpath, out / "diagnostic.json", out / "diagnostic.npz"):
            if f.exists():
                f.unlink()
        u0 = make_initial(cfg.init, cfg.grid)
        _write_atomic(mpath, (json.dumps(_manifest(cfg, u0), indent=2) + "\n").encode())
        c = np.array(u0.coeffs)

    stepper = Stepper(cfg.grid, p, dt, cfg.params.integrator, cfg.params.dealias, cfg.params.transform)
    obs = cfg.observables

    with open(spath, "a") as fh:

        def record(step: int, c: np.ndarray):
            t = step * dt
            with np.errstate(over="ignore", invalid="ignore"):
                vals = obs.evaluate(SpectralField(cfg.grid, c), p)
            bad = sorted(k for k, v in vals.items() if not math.isfinite(v))
            if bad:
                last = records[-1].step if records else None
                raise _abort(out, f"non-finite observable {bad} at t={t:.6g}", step, t, last, None)
            rec = TimeSeriesRecord(step, t, vals)
            fh.write(rec.to_json() + "\n")
            fh.flush()
            _save_checkpoint(cpath, step, c)
            records.append(rec)

        if not records:
            if not np.all(np.isfinite(c)):
                raise _abort(out, "initial datum is not finite", 0, 0.0, None, None)
            record(0, c)
        step = start_step
        cad = cfg.cadence_steps
        while step < n_total:
            nxt = min((step // cad + 1) * cad, n_total)
            c_new = stepper.advance(c, nxt - step)
            if not np.all(np.isfinite(c_new)):
                raise _abort(out, f"non-finite state at t={nxt * dt:.6g}", nxt, nxt * dt, step, c)
            c, step = c_new, nxt
            record(step, c)
    return RunResult(out, records, resumed)


def run_from_manifest(run_dir, output_dir) -> RunResult:
    """Re-execute a stored run into a fresh directory."""
    cfg = config_from_manifest(run_dir).with_output_dir(output_dir)
    return run_experiment(cfg, resume=False)

