"""Grid harmonic oscillator: return fidelity after one period against grid size."""
import argparse
from pathlib import Path

import numpy as np

from sacsim.dynamics import evolve
from sacsim.io import write_csv
from sacsim.models.field import field_grid, gaussian_packet, grid_points, harmonic
from sacsim.statespace import computational_basis, from_phase_space, to_phase_space

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--out", type=Path, default=Path("out/field"))
args = ap.parse_args()
args.out.mkdir(parents=True, exist_ok=True)

rows = []
for n in (32, 64, 128, 256, 512):
    box = (-10.0, 10.0)
    x = grid_points(n, box)
    psi = gaussian_packet(x, center=1.5)
    traj = evolve(field_grid(harmonic(), n, box), to_phase_space(psi, computational_basis(n)), 2 * np.pi, samples=2)
    fid = abs(np.vdot(psi.amps, from_phase_space(traj.final).amps)) ** 2
    rows.append((n, fid, traj.max_norm_drift()))
    print(f"N={n:4d} fidelity={fid:.10f}")
write_csv(args.out / "return_fidelity.csv", ("N", "fidelity", "norm_drift"), rows)
