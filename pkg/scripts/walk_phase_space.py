"""Dump phase-space data of a T=100 coined walk: particle trajectories of the
origin modes plus the final position distribution, for plotting elsewhere."""
import argparse
from pathlib import Path

import numpy as np

from sacsim.io import write_csv
from sacsim.models.walk import WalkSpec, run_walk

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--steps", type=int, default=100)
ap.add_argument("--out", type=Path, default=Path("out/walk"))
args = ap.parse_args()

coin = np.array([1.0, 1.0j]) / np.sqrt(2)
res = run_walk(WalkSpec(args.steps, args.steps, coin))
args.out.mkdir(parents=True, exist_ok=True)

rows = []
for c in (0, 1):
    q, p = res.mode_trajectory(c, 0)
    rows += [(t, c, q[t], p[t]) for t in range(len(q))]
write_csv(args.out / "origin_modes.csv", ("step", "coin", "q", "p"), rows)
res.write_distribution_csv(args.out / "distribution.csv")
write_csv(args.out / "sigma.csv", ("step", "sigma"), [(t, res.sigma(t)) for t in range(args.steps + 1)])
print(f"sigma({args.steps}) = {res.sigma():.4f}, sigma ratio T/(T/2) = {res.sigma() / res.sigma(args.steps // 2):.4f}")
