"""Trotter-Suzuki error against step count for the stock models, written as CSV."""
import argparse
from pathlib import Path

from sacsim.io import write_csv
from sacsim.trotter import error_scan, ising_chain, x_plus_z

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--t", type=float, default=1.0)
ap.add_argument("--out", type=Path, default=Path("out/trotter"))
args = ap.parse_args()
args.out.mkdir(parents=True, exist_ok=True)

r_values = [2, 4, 8, 16, 32, 64, 128]
rows = []
for name, model in (("x_plus_z", x_plus_z()), ("ising_chain", ising_chain(3))):
    for chi in (1, 2, 3):
        scan = error_scan(model, args.t, chi, r_values)
        rows += [(name, chi, r, e, b) for r, e, b in scan.rows]
        print(f"{name:12s} chi={chi} slope={scan.slope}")
write_csv(args.out / "scaling.csv", ("model", "chi", "r", "error", "bound"), rows)
