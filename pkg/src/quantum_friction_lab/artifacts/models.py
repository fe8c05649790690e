"""Data models for on-disk artifacts."""

from dataclasses import dataclass, field
from typing import Optional

import pandas as pd


@dataclass
class GridArtifact:
    """A table destined for CSV (and optionally Parquet) plus its sidecar metadata.

    Columns carry bracketed units in their names and rows are already in
    deterministic order; the last column is the in-band "status" marker.
    """

    name: str
    frame: pd.DataFrame
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        """Validate artifact after initialization."""
        if not self.name:
            raise ValueError("artifact name must not be empty")
        if list(self.frame.columns)[-1:] != ["status"]:
            raise ValueError(f"artifact '{self.name}' must end with a 'status' column")


@dataclass
class ArtifactStatistics:
    """Statistics for write operations."""

    file_path: str = ""
    num_rows: int = 0
    num_columns: int = 0
    num_blocks: int = 0
    file_size_bytes: int = 0
    elapsed_time: float = 0.0
    format: str = "csv"
    sidecar_path: Optional[str] = None
