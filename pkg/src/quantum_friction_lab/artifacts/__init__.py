"""On-disk artifacts: CSV/Parquet tables, JSON sidecars, sweep journals and SVG figures."""

from .journal import SweepJournal, fingerprint
from .models import ArtifactStatistics, GridArtifact
from .rendering import render_heatmap_svg, render_lines_svg
from .writer_interface import ArtifactWriter
from .writers import CsvArtifactWriter, ParquetArtifactWriter, write_grid_artifact, write_sidecar

__all__ = [
    "ArtifactStatistics",
    "ArtifactWriter",
    "CsvArtifactWriter",
    "GridArtifact",
    "ParquetArtifactWriter",
    "SweepJournal",
    "fingerprint",
    "render_heatmap_svg",
    "render_lines_svg",
    "write_grid_artifact",
    "write_sidecar",
]
