import json

import numpy as np
import pytest

from nlsgrowth.energies import EnergySpec
from nlsgrowth.initial import InitSpec
from nlsgrowth.integrator import NLSParams, Stepper
from nlsgrowth.runs import (
    Observables,
    RunAborted,
    RunConfig,
    TimeSeriesRecord,
    config_from_manifest,
    read_manifest,
    read_series,
    run_experiment,
    run_from_manifest,
)
from nlsgrowth.spectral import GridSpec


def make_cfg(tmp_path, name="run", t_end=0.2, init=None, integrator="strang", energies=(), cadence=5, n=16):
    return RunConfig(
        grid=GridSpec.cube(2, n),
        params=NLSParams(2, 3, 0.01, t_end, integrator=integrator),
        init=init or InitSpec("random_sobolev", amplitude=1.0, s=2, seed=1, kmax=4),
        observables=Observables(energies=energies),
        cadence_steps=cadence,
        output_dir=str(tmp_path / name),
    )


def test_zero_length_run(tmp_path):
    res = run_experiment(make_cfg(tmp_path, t_end=0.0))
    assert len(res.records) == 1 and res.records[0].t == 0.0
    assert len(read_series(res.path)) == 1


def test_records_and_cadence(tmp_path):
    res = run_experiment(make_cfg(tmp_path, t_end=0.23))
    assert [r.step for r in res.records] == [0, 5, 10, 15, 20, 23]
    assert list(res.records[0].values) == ["mass", "hamiltonian", "H1", "H2"]
    t, m = res.series("mass")
    assert np.max(np.abs(m - m[0])) <= 1e-13 * m[0]


def test_plane_wave_norms_constant(tmp_path):
    cfg = make_cfg(tmp_path, init=InitSpec("plane_wave", amplitude=0.7, k0=(2, 1)), t_end=1.0)
    res = run_experiment(cfg)
    for name in ("mass", "hamiltonian", "H1", "H2"):
        _, y = res.series(name)
        assert np.max(np.abs(y - y[0])) <= 1e-10 * y[0]


def test_h1_bound(tmp_path):
    res = run_experiment(make_cfg(tmp_path, t_end=1.0))
    r0 = res.records[0].values
    for r in res.records:
        assert r.values["H1"] ** 2 <= (r0["mass"] + r0["hamiltonian"]) * (1 + 1e-12)


def test_rerun_is_byte_identical(tmp_path):
    cfg = make_cfg(tmp_path, energies=(EnergySpec("even", 1, 3),))
    run_experiment(cfg, resume=False)
    a = {f: (tmp_path / "run" / f).read_bytes() for f in ("manifest.json", "series.ndjson")}
    run_experiment(cfg, resume=False)
    b = {f: (tmp_path / "run" / f).read_bytes() for f in ("manifest.json", "series.ndjson")}
    assert a == b


def test_completed_run_resumes_as_noop(tmp_path):
    cfg = make_cfg(tmp_path)
    first = run_experiment(cfg)
    again = run_experiment(cfg)
    assert again.resumed_from == first.records[-1].step
    assert [r.to_json() for r in again.records] == [r.to_json() for r in first.records]


def _interrupt_after(monkeypatch, calls):
    real = Stepper.advance
    count = {"n": 0}

    def flaky(self, c, n):
        count["n"] += 1
        if count["n"] > calls:
            raise KeyboardInterrupt
        return real(self, c, n)

    monkeypatch.setattr(Stepper, "advance", flaky)


def test_resume_after_interruption_matches_clean_run(tmp_path, monkeypatch):
    clean = run_experiment(make_cfg(tmp_path, "clean"))
    cfg = make_cfg(tmp_path, "broken")
    with monkeypatch.context() as mp:
        _interrupt_after(mp, 2)
        with pytest.raises(KeyboardInterrupt):
            run_experiment(cfg)
    assert len(read_series(cfg.output_dir)) == 3
    res = run_experiment(cfg)
    assert res.resumed_from == 10
    assert (tmp_path / "clean" / "series.ndjson").read_bytes() == (tmp_path / "broken" / "series.ndjson").read_bytes()
    assert len(res.records) == len(clean.records)


def test_orphan_records_are_dropped(tmp_path, monkeypatch):
    cfg = make_cfg(tmp_path, "broken")
    run_experiment(make_cfg(tmp_path, "clean"))
    with monkeypatch.context() as mp:
        _interrupt_after(mp, 2)
        with pytest.raises(KeyboardInterrupt):
            run_experiment(cfg)
    # a record written without its checkpoint
    orphan = TimeSeriesRecord(15, 0.15, {"mass": 1.0, "hamiltonian": 1.0, "H1": 1.0, "H2": 1.0})
    with open(tmp_path / "broken" / "series.ndjson", "a") as fh:
        fh.write(orphan.to_json() + "\n")
    run_experiment(cfg)
    assert (tmp_path / "clean" / "series.ndjson").read_bytes() == (tmp_path / "broken" / "series.ndjson").read_bytes()


def test_resume_rejects_changed_config(tmp_path):
    run_experiment(make_cfg(tmp_path))
    with pytest.raises(ValueError, match="different configuration"):
        run_experiment(make_cfg(tmp_path, t_end=0.3))
    assert len(run_experiment(make_cfg(tmp_path, t_end=0.3), resume=False).records) == 7


def test_manifest_contents(tmp_path):
    cfg = make_cfg(tmp_path, energies=(EnergySpec("even", 1, 3),))
    run_experiment(cfg)
    m = read_manifest(cfg.output_dir)
    assert m["format"] == "nlsgrowth-run/1"
    assert {"code_version", "numpy_version", "python_version"} <= set(m)
    assert "created" not in m
    assert m["resolved"] == {"transform": "dft", "n_steps": 20}
    assert m["observables"] == ["mass", "hamiltonian", "H1", "H2", "energy_even_k1"]
    assert m["identities"]["d/dt mass"] == "0"
    assert m["identities"]["d/dt hamiltonian"] == "0"
    assert config_from_manifest(m) == cfg


def test_nondeterministic_manifest_is_stamped(tmp_path):
    cfg = make_cfg(tmp_path)
    cfg = RunConfig(cfg.grid, cfg.params, cfg.init, cfg.observables, cfg.cadence_steps, cfg.output_dir, deterministic=False)
    run_experiment(cfg)
    assert "created" in read_manifest(cfg.output_dir)


def test_run_from_manifest_reproduces(tmp_path):
    cfg = make_cfg(tmp_path)
    run_experiment(cfg)
    run_from_manifest(cfg.output_dir, tmp_path / "copy")
    assert (tmp_path / "run" / "series.ndjson").read_bytes() == (tmp_path / "copy" / "series.ndjson").read_bytes()


def test_overflow_in_observables_aborts(tmp_path):
    cfg = make_cfg(tmp_path, init=InitSpec("plane_wave", amplitude=1e200, k0=(1, 0)))
    with pytest.raises(RunAborted) as ei:
        run_experiment(cfg)
    d = json.loads(ei.value.diagnostic.read_text())
    assert d["step"] == 0 and d["last_finite_step"] is None
    assert "non-finite observable" in d["reason"]


def test_non_finite_state_aborts_with_last_state(tmp_path):
    cfg = make_cfg(tmp_path, init=InitSpec("plane_wave", amplitude=1e60, k0=(1, 0)), integrator="rk4", cadence=1)
    with pytest.raises(RunAborted) as ei:
        run_experiment(cfg)
    d = json.loads(ei.value.diagnostic.read_text())
    assert d["last_finite_step"] == 0 and d["step"] == 1
    with np.load(tmp_path / "run" / "diagnostic.npz") as z:
        assert np.all(np.isfinite(z["coeffs"]))
    assert len(read_series(cfg.output_dir)) == 1


def test_config_validation(tmp_path):
    cfg = make_cfg(tmp_path)
    with pytest.raises(ValueError, match="dim"):
        RunConfig(GridSpec.cube(3, 8), cfg.params, cfg.init)
    with pytest.raises(ValueError, match="cadence"):
        RunConfig(cfg.grid, cfg.params, cfg.init, cadence_steps=0)
    with pytest.raises(ValueError, match="p=5"):
        RunConfig(cfg.grid, cfg.params, cfg.init, Observables(energies=(EnergySpec("even", 1, 5),)))
    with pytest.raises(ValueError, match="multiple"):
        RunConfig(cfg.grid, NLSParams(2, 3, 0.01, 0.015), cfg.init)
    with pytest.raises(ValueError, match="duplicate"):
        Observables(sobolev=(1, 1.0)).names()


def test_record_round_trip():
    r = TimeSeriesRecord(3, 0.1 + 0.2, {"mass": 1 / 3})
    assert TimeSeriesRecord.from_json(r.to_json()) == r
    with pytest.raises(ValueError):
        TimeSeriesRecord(0, 0.0, {"mass": float("nan")})


def test_config_dict_round_trip(tmp_path):
    cfg = make_cfg(tmp_path, energies=(EnergySpec("odd", 1, 3),))
    assert RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg
