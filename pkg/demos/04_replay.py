"""Traces on disk are the source of truth: summaries can always be rebuilt.

Runs a tiny alpha sweep, deletes nothing, recomputes every summary CSV from
the JSONL traces into a second directory and checks the bytes match.

    python3 demos/04_replay.py [out_dir]
"""

import sys
from pathlib import Path

from ipdlab.experiments import ExperimentSpec, replay, run_alpha_sweep

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_runs/replay")
run = run_alpha_sweep(ExperimentSpec(subject="STFT", alphas=(0.2, 0.8), k=30, output_dir=str(out / "run")))
print("traces:", *[str(p) for p in run.traces_paths], sep="\n  ")
for p in replay(run.run_dir, out / "replayed"):
    same = p.read_bytes() == (run.run_dir / p.name).read_bytes()
    print(f"{p.name:22} {'identical' if same else 'DIFFERENT'}")
