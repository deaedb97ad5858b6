"""Classic strategies against opponents of varying cooperativeness.

Runs a small alpha sweep for a handful of strategies, prints their overall
cooperation and behavioral profile at alpha = 0.5, and (with matplotlib)
renders SVG charts next to the CSVs. Fitting SFEM to RND play is expected to
warn about slow convergence: no deterministic strategy explains coin flips,
so the likelihood is nearly flat.

    python3 demos/01_alpha_sweep_profiles.py [out_dir]
"""

import csv
import sys
from pathlib import Path

from ipdlab.experiments import ExperimentSpec, run_alpha_sweep

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_runs/alpha")
alphas = (0.0, 0.25, 0.5, 0.75, 1.0)

for subject in ("TFT", "GRIM", "WSLS", "RND"):
    run = run_alpha_sweep(ExperimentSpec(subject=subject, alphas=alphas, k=50, output_dir=str(out / subject)))
    with open(run.run_dir / "pcoop.csv") as fh:
        curve = [f"{float(r['p_coop']):.2f}" for r in csv.DictReader(fh)]
    with open(run.run_dir / "profile.csv") as fh:
        half = {r["dimension"]: r["mean"] for r in csv.DictReader(fh) if r["alpha"] == "0.5"}
    print(f"{subject:5} p_coop over alpha {alphas}: {' '.join(curve)}")
    print("      profile at alpha=0.5: " + ", ".join(f"{k}={float(v):.2f}" if v else f"{k}=n/a"
                                               for k, v in half.items()))
    try:
        from ipdlab.plots import render_run
        render_run(run.run_dir)
    except ImportError:
        pass

print(f"\nruns written under {out}/")
