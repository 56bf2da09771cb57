"""Render benchmark report figures from aggregated rows."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_PANELS = [
    ("reliability_min_mean", "reliability.png", "Worst-service reliability"),
    ("wall_time_s_mean", "wall_time.png", "Wall time (s)"),
    ("bandwidth_mean", "bandwidth.png", "Committed bandwidth"),
    ("objective_mean", "objective.png", "Objective value"),
]


def render_report(agg_rows: list[dict], out_dir) -> list[Path]:
    """One grouped bar chart per metric; returns the written PNG paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scenarios = sorted({r["scenario"] for r in agg_rows})
    algorithms = sorted({r["algorithm"] for r in agg_rows})
    lookup = {(r["scenario"], r["algorithm"]): r for r in agg_rows}

    paths = []
    for metric, fname, label in _PANELS:
        fig, ax = plt.subplots(figsize=(7, 4))
        width = 0.8 / max(1, len(algorithms))
        for ai, algo in enumerate(algorithms):
            xs, ys = [], []
            for si, scen in enumerate(scenarios):
                row = lookup.get((scen, algo))
                if row is None or row.get(metric, "") == "":
                    continue
                xs.append(si + ai * width)
                ys.append(float(row[metric]))
            if xs:
                ax.bar(xs, ys, width=width, label=algo)
        ax.set_xticks([i + 0.4 - width / 2 for i in range(len(scenarios))])
        ax.set_xticklabels(scenarios)
        ax.set_ylabel(label)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = out / fname
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths
