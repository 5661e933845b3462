"""Plane-wave accuracy, mass drift and hamiltonian self-convergence.

    python3 scripts/conservation.py --out results/conservation.json
"""

import argparse
import json
from pathlib import Path

import numpy as np

from nlsgrowth.initial import InitSpec, make_initial
from nlsgrowth.integrator import NLSParams, Stepper, evolve
from nlsgrowth.spectral import GridSpec, SpectralField, mass, to_physical
from nlsgrowth.studies import convergence_study


def plane_wave_error(n, amplitude, k0, dt, t_end):
    g = GridSpec.cube(2, n)
    u0 = SpectralField.plane_wave(g, k0, amplitude)
    tr = evolve(u0, NLSParams(2, 3, dt, t_end), cadence=int(round(t_end / dt)))
    phase = sum(k * x for k, x in zip(k0, g.coords())) - (sum(k * k for k in k0) + amplitude**2) * t_end
    return float(np.max(np.abs(to_physical(tr.states[-1]) - amplitude * np.exp(1j * phase))))


def mass_drift(n, steps, dt, seed):
    g = GridSpec.cube(2, n)
    u0 = make_initial(InitSpec("random_sobolev", s=3, seed=seed), g)
    st, m0 = Stepper(g, 3, dt), mass(u0)
    c, worst = u0.coeffs, 0.0
    for _ in range(steps // 1000):
        c = st.advance(c, 1000)
        worst = max(worst, abs(mass(SpectralField(g, c)) - m0) / m0)
    return worst


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--out", default="results/conservation.json")
    args = ap.parse_args()

    out = {"plane_wave_max_error": plane_wave_error(args.n, 0.8, (2, 3), 1e-3, 10.0)}
    print(f"plane wave, t=10: max error {out['plane_wave_max_error']:.3e}")
    out["mass_drift"] = {}
    for seed in range(args.seeds):
        d = mass_drift(args.n, 10_000, 1e-3, seed)
        out["mass_drift"][seed] = d
        print(f"seed {seed}: mass drift over 1e4 Strang steps {d:.3e}")
    g = GridSpec.cube(2, args.n)
    u0 = make_initial(InitSpec("random_sobolev", s=3, seed=0), g)
    for integ in ("strang", "rk4"):
        rep = convergence_study(u0, NLSParams(2, 3, 1e-3, 1.0, integrator=integ), [4e-3, 2e-3, 1e-3])
        out[f"hamiltonian_{integ}"] = rep.to_dict()
        print(f"{integ}: hamiltonian drifts {['%.2e' % d for d in rep.drifts]} -> {rep.status}")

    path = Path(args.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(out, indent=2) + "\n")


if __name__ == "__main__":
    main()
