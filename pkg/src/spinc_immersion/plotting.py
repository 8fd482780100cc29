"""PNG figures written next to the JSON/CSV reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .grid import ChartGrid  # noqa: E402

LABELS = {
    "killing": "Killing residual",
    "dxi": r"$|d\xi|$",
    "metric": "metric error",
    "B": "B validator",
    "normconn": "normal connection",
    "roundtrip": "round-trip RMS",
    "path": "path discrepancy",
}


def convergence_figure(report: dict, path):
    """Log-log error against ``h`` with the fitted order in the legend and an h^2 guide."""
    hs = np.asarray(report["h"])
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for key, errs in report["errors"].items():
        errs = np.asarray(errs, dtype=float)
        order = report["orders"][key]
        if order == "exact" or np.any(errs <= 0):
            continue
        ax.loglog(hs, errs, "o-", label=f"{LABELS.get(key, key)} (p={order:.2f})")
    guide = hs**2 / hs[0] ** 2
    ax.loglog(hs, guide * ax.get_ylim()[1] * 0.3, "k--", lw=0.8, label=r"$\propto h^2$")
    ax.set_xlabel("h")
    ax.set_ylabel("max error")
    ax.set_title(f"{report['scenario']}: convergence")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def residual_heatmap(per_node: np.ndarray, grid: ChartGrid, path, title: str = "Killing residual"):
    """Per-node residual over the chart (2-D grids; 3-D grids show the middle slice of the last axis)."""
    data = per_node
    if grid.n == 3:
        data = per_node[..., grid.shape[2] // 2]
    elif grid.n != 2:
        raise ValueError("heatmaps need a 2-D or 3-D grid")
    lo, hi = grid.origin, grid.upper
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    im = ax.imshow(data.T, origin="lower", extent=(lo[0], hi[0], lo[1], hi[1]), aspect="auto", cmap="viridis")
    fig.colorbar(im, ax=ax)
    ax.set_xlabel("u")
    ax.set_ylabel("v")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
