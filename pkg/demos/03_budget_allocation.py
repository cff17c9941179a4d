"""Splitting a fixed simulation budget between outer and inner samples.

A small pilot run fixes the ingredients of the interval width.  The width
is then minimized over designs (N, M) with c1 * N + c2 * N * M <= CB.
The script writes the width-vs-N curves to CSV, ready for plotting.

Run:  python demos/03_budget_allocation.py [output_dir]
"""
import csv
import sys
from pathlib import Path

import numpy as np

from nestrisk import (RngStream, SimulationCost, allocate_budget, derive_pilot_terms,
                      derive_seed, generate_data, mm1_model, simulate_nested)

out = Path(sys.argv[1] if len(sys.argv) > 1 else ".")
SEED = 2024
CB = 500_000

# A queue with only n = 10 observations of each rate.
data = generate_data(150, 500, 10, RngStream(derive_seed(SEED, 1)))
model = mm1_model(data)

# Pilot: 50 scenarios with 100 inner draws, 5e3 cost units.
pilot = simulate_nested(model, 50, 100, derive_seed(SEED, 2))
summary = derive_pilot_terms(pilot, 0.95, "gaussian")
t = summary.terms
print(f"pilot terms: sigma_v {t.sigma_v:.3e} sigma_c {t.sigma_c:.3e} "
      f"tau_v {t.tau_v:.3e} tau_c {t.tau_c:.3e}")

for target in ("VaR", "CVaR"):
    plan = allocate_budget(summary, 0.95, 0.025, 0.025, SimulationCost(1, 1), CB, 30, target)
    w = np.array([r[2] for r in plan.grid])
    print(f"{target:4s}: best (N, M) = ({plan.n}, {plan.m}), half-width "
          f"{plan.predicted_half_width:.3e}; worst/best along the grid {w.max() / w.min():.1f}")
    path = out / f"budget_{target.lower()}.csv"
    with path.open("w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["N", "M", "predicted_width"])
        wr.writerows(plan.grid)
    print(f"      grid written to {path}")

# VaR favours few scenarios and long inner runs, while CVaR, whose inner
# term averages over the whole tail, favours many short ones.
