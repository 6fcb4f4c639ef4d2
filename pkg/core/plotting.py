"""Persistence diagram rendering (static SVG)."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .persistence import PersistenceDiagram  # noqa: E402

_MARKERS = {0: "o", 1: "^", 2: "s", 3: "D"}
_COLORS = {0: "#1f77b4", 1: "#d62728", 2: "#2ca02c", 3: "#9467bd"}


def render_diagram_svg(diag: PersistenceDiagram, path: str | Path, *, title: Optional[str] = None) -> Path:
    """
    Birth/death scatter per dimension. Bars still alive at r_max are drawn on a
    band just above the finite points.
    """
    p = Path(path)
    finite = [q for q in diag.pairs if not q.is_infinite]
    top = max([q.death for q in finite] + [q.birth for q in diag.pairs] + [float(diag.meta.get("r_max") or 0.0), 1e-12])
    band = top * 1.08

    with plt.rc_context({"svg.hashsalt": "slacktopo", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5.0, 5.0))
        try:
            ax.plot([0.0, band], [0.0, band], color="#888888", linewidth=0.8, zorder=1)
            ax.axhline(band, color="#bbbbbb", linestyle="--", linewidth=0.8, zorder=1)
            for dim in range(diag.max_dim + 1):
                pts = diag.by_dim(dim)
                if not pts:
                    continue
                xs = [q.birth for q in pts]
                ys = [band if q.is_infinite else q.death for q in pts]
                ax.scatter(
                    xs,
                    ys,
                    s=18,
                    marker=_MARKERS.get(dim, "x"),
                    color=_COLORS.get(dim, "#333333"),
                    label=f"H{dim}",
                    zorder=2,
                )
            ax.set_xlim(-0.02 * band, band * 1.04)
            ax.set_ylim(-0.02 * band, band * 1.04)
            ax.set_xlabel("birth")
            ax.set_ylabel("death")
            if title:
                ax.set_title(title)
            ax.legend(loc="lower right", frameon=False)
            fig.savefig(p, format="svg", bbox_inches="tight", metadata={"Date": None})
        finally:
            plt.close(fig)
    return p
