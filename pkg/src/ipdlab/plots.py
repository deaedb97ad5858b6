"""Optional SVG line charts drawn from the summary CSVs (needs the ``plots`` extra).

Charts are a convenience for looking at a run; the CSVs are the real output.
"""

from __future__ import annotations

import csv
from pathlib import Path

# csv name -> (x column, y column, grouping column or None, title)
CHARTS = {
    "pcoop.csv": ("alpha", "p_coop", None, "cooperation vs alpha"),
    "pcoop_temperature.csv": ("alpha", "p_coop", "temperature", "cooperation vs alpha per temperature"),
    "window_per_round.csv": ("round", "mean", "window", "cooperation per round per memory window"),
    "steady_state.csv": ("window", "steady_state", None, "steady-state cooperation per window"),
    "profile.csv": ("alpha", "mean", "dimension", "behavioral profile vs alpha"),
    "sfem.csv": ("alpha", "weight", "strategy", "SFEM mixture weights vs alpha"),
    "comprehension_per_round.csv": ("round", "accuracy", "template", "comprehension accuracy per round"),
}


def _num(v: str):
    try:
        return float(v)
    except ValueError:
        return v


def line_chart(csv_path: str | Path, out_path: str | Path, x: str, y: str, group: str | None = None,
               title: str = "") -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with open(csv_path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.DictReader(fh) if r[y] != ""]
    series: dict[str, list[tuple]] = {}
    for r in rows:
        series.setdefault(r[group] if group else y, []).append((_num(r[x]), float(r[y]),
                                                                r.get("ci_low"), r.get("ci_high")))
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for name, pts in series.items():
        xs = [p[0] for p in pts]
        ax.plot(xs, [p[1] for p in pts], marker="o" if len(pts) < 30 else None, ms=3, label=str(name))
        if all(p[2] not in (None, "") for p in pts):
            ax.fill_between(range(len(xs)) if isinstance(xs[0], str) else xs,
                            [float(p[2]) for p in pts], [float(p[3]) for p in pts], alpha=0.15)
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    ax.set_title(title)
    if group:
        ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, format="svg")
    plt.close(fig)
    return out_path


def render_run(run_dir: str | Path, out_dir: str | Path | None = None) -> list[Path]:
    """One SVG per known summary CSV present in ``run_dir``."""
    run_dir = Path(run_dir)
    out_dir = Path(out_dir) if out_dir else run_dir / "plots"
    out_dir.mkdir(parents=True, exist_ok=True)
    made = []
    for name, (x, y, group, title) in CHARTS.items():
        src = run_dir / name
        if src.exists():
            made.append(line_chart(src, out_dir / (src.stem + ".svg"), x, y, group, title))
    return made
