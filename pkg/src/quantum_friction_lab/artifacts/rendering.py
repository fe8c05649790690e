"""Optional SVG rendering; skipped with a warning when matplotlib is absent."""

import logging
from pathlib import Path
from typing import Optional

import numpy as np

logger = logging.getLogger(__name__)


def _pyplot():
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        logger.warning("matplotlib not installed (extra 'plot'), skipping SVG rendering")
        return None
    return plt


def render_heatmap_svg(
    path: str | Path,
    x: np.ndarray,
    y: np.ndarray,
    values: np.ndarray,
    xlabel: str,
    ylabel: str,
    title: str,
    overlays: Optional[dict[str, tuple[np.ndarray, np.ndarray]]] = None,
) -> bool:
    """Heatmap of values[i, j] over (x[j], y[i]) with optional overlay curves.

    Returns:
        True if the SVG was written
    """
    plt = _pyplot()
    if plt is None:
        return False
    fig, ax = plt.subplots(figsize=(6, 4.5))
    mesh = ax.pcolormesh(x, y, values, shading="auto", cmap="RdBu_r")
    fig.colorbar(mesh, ax=ax)
    for label, (cx, cy) in (overlays or {}).items():
        ax.plot(cx, cy, "--", linewidth=0.8, label=label)
    if overlays:
        ax.set_ylim(float(np.min(y)), float(np.max(y)))
        ax.legend(fontsize="small")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    logger.info(f"Figure saved to {path}")
    return True


def render_lines_svg(
    path: str | Path,
    series: dict[str, tuple[np.ndarray, np.ndarray]],
    xlabel: str,
    ylabel: str,
    title: str,
    style: str = "-",
) -> bool:
    """Line plot of named (x, y) series."""
    plt = _pyplot()
    if plt is None:
        return False
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for label, (sx, sy) in series.items():
        ax.plot(sx, sy, style, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    logger.info(f"Figure saved to {path}")
    return True
