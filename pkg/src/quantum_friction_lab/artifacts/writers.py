"""CSV and Parquet artifact writers with atomic finalisation, plus JSON sidecars."""

import json
import logging
import os
import tempfile
import time
from pathlib import Path
from typing import Optional

import pandas as pd
import pyarrow as pa
import pyarrow.parquet as pq

from .models import ArtifactStatistics, GridArtifact
from .writer_interface import ArtifactWriter

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"


def _temporary_path(output_path: Path) -> Path:
    handle, name = tempfile.mkstemp(prefix=f".{output_path.name}.", dir=output_path.parent)
    os.close(handle)
    return Path(name)


class CsvArtifactWriter(ArtifactWriter):
    """Write a CSV file in blocks; the file appears at its final path only when finished.

    Floats use a fixed format and NaN is spelled "nan", so identical inputs
    give byte-identical files.
    """

    def __init__(self, float_format: str = FLOAT_FORMAT):
        self.float_format = float_format
        self._handle = None
        self._output_path: Optional[Path] = None
        self._temp_path: Optional[Path] = None
        self._columns: Optional[list] = None
        self._num_blocks = 0
        self._total_rows = 0
        self._start_time = 0.0

    def start_writing(self, output_path: str) -> None:
        if self._handle is not None:
            raise RuntimeError("Writer already started. Call finish_writing() first.")
        self._output_path = Path(output_path)
        self._output_path.parent.mkdir(parents=True, exist_ok=True)
        self._temp_path = _temporary_path(self._output_path)
        self._handle = open(self._temp_path, "w", newline="", encoding="utf-8")
        self._columns = None
        self._num_blocks = 0
        self._total_rows = 0
        self._start_time = time.time()
        logger.debug(f"Starting CSV artifact {self._output_path}")

    def write_block(self, df: pd.DataFrame) -> None:
        """Append a block; the header is written with the first one.

        Raises:
            RuntimeError: If start_writing() hasn't been called
            ValueError: If the columns differ from the first block
        """
        if self._handle is None:
            raise RuntimeError("Writer not started. Call start_writing() first.")
        if self._columns is None:
            self._columns = list(df.columns)
        elif list(df.columns) != self._columns:
            raise ValueError(
                f"DataFrame schema mismatch. Expected {self._columns}, got {list(df.columns)}"
            )
        df.to_csv(
            self._handle,
            index=False,
            header=self._num_blocks == 0,
            na_rep="nan",
            float_format=self.float_format,
            lineterminator="\n",
        )
        self._num_blocks += 1
        self._total_rows += len(df)

    def finish_writing(self) -> ArtifactStatistics:
        """Move the completed file into place.

        Raises:
            RuntimeError: If no blocks were written
        """
        if self._handle is None or self._num_blocks == 0:
            raise RuntimeError("No blocks written. Call write_block() at least once.")
        self._handle.close()
        self._handle = None
        os.replace(self._temp_path, self._output_path)
        self._temp_path = None
        stats = ArtifactStatistics(
            file_path=str(self._output_path),
            num_rows=self._total_rows,
            num_columns=len(self._columns),
            num_blocks=self._num_blocks,
            file_size_bytes=self._output_path.stat().st_size,
            elapsed_time=time.time() - self._start_time,
            format="csv",
        )
        logger.info(f"Wrote {stats.num_rows} rows to {stats.file_path}")
        return stats

    def close(self) -> None:
        if self._handle is not None:
            logger.warning("CSV writer was not properly finished, discarding partial file")
            self._handle.close()
            self._handle = None
        if self._temp_path is not None and self._temp_path.exists():
            self._temp_path.unlink()
        self._temp_path = None
        self._columns = None


class ParquetArtifactWriter(ArtifactWriter):
    """Write a Parquet copy of an artifact table, one row group per block."""

    def __init__(self, compression: str = "snappy"):
        self.compression = compression
        self._writer: Optional[pq.ParquetWriter] = None
        self._schema: Optional[pa.Schema] = None
        self._output_path: Optional[Path] = None
        self._temp_path: Optional[Path] = None
        self._num_blocks = 0
        self._total_rows = 0
        self._start_time = 0.0

    def start_writing(self, output_path: str) -> None:
        if self._output_path is not None:
            raise RuntimeError("Writer already started. Call finish_writing() first.")
        self._output_path = Path(output_path)
        self._output_path.parent.mkdir(parents=True, exist_ok=True)
        self._temp_path = _temporary_path(self._output_path)
        self._schema = None
        self._num_blocks = 0
        self._total_rows = 0
        self._start_time = time.time()

    def write_block(self, df: pd.DataFrame) -> None:
        """Append a block as a row group.

        Raises:
            RuntimeError: If start_writing() hasn't been called
            ValueError: If the schema differs from the first block
        """
        if self._output_path is None:
            raise RuntimeError("Writer not started. Call start_writing() first.")
        table = pa.Table.from_pandas(df, preserve_index=False)
        if self._writer is None:
            self._schema = table.schema
            self._writer = pq.ParquetWriter(
                str(self._temp_path), self._schema, compression=self.compression
            )
        if not table.schema.equals(self._schema):
            raise ValueError(
                f"DataFrame schema mismatch. Expected {self._schema}, got {table.schema}"
            )
        self._writer.write_table(table)
        self._num_blocks += 1
        self._total_rows += len(df)

    def finish_writing(self) -> ArtifactStatistics:
        if self._writer is None:
            raise RuntimeError("No blocks written. Call write_block() at least once.")
        self._writer.close()
        self._writer = None
        os.replace(self._temp_path, self._output_path)
        stats = ArtifactStatistics(
            file_path=str(self._output_path),
            num_rows=self._total_rows,
            num_columns=len(self._schema.names),
            num_blocks=self._num_blocks,
            file_size_bytes=self._output_path.stat().st_size,
            elapsed_time=time.time() - self._start_time,
            format="parquet",
        )
        self._output_path = None
        self._temp_path = None
        logger.info(f"Wrote Parquet copy {stats.file_path} ({stats.num_blocks} row groups)")
        return stats

    def close(self) -> None:
        if self._writer is not None:
            logger.warning("Parquet writer was not properly finished, discarding partial file")
            self._writer.close()
            self._writer = None
        if self._temp_path is not None and self._temp_path.exists():
            self._temp_path.unlink()
        self._output_path = None
        self._temp_path = None
        self._schema = None


def write_sidecar(path: str | Path, metadata: dict) -> Path:
    """Write the JSON metadata sidecar atomically."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp = _temporary_path(path)
    with open(temp, "w", encoding="utf-8") as handle:
        json.dump(metadata, handle, indent=2, sort_keys=True, default=str)
        handle.write("\n")
    os.replace(temp, path)
    return path


def write_grid_artifact(
    artifact: GridArtifact,
    output_dir: str | Path,
    parquet: bool = False,
    block_rows: int = 10_000,
) -> list[ArtifactStatistics]:
    """Write <name>.csv, <name>.json and optionally <name>.parquet into output_dir.

    Returns:
        Statistics for every table file written
    """
    output_dir = Path(output_dir)
    blocks = [
        artifact.frame.iloc[start : start + block_rows]
        for start in range(0, max(len(artifact.frame), 1), block_rows)
    ]
    writers: list[tuple[ArtifactWriter, str]] = [(CsvArtifactWriter(), "csv")]
    if parquet:
        writers.append((ParquetArtifactWriter(), "parquet"))

    results = []
    sidecar = write_sidecar(output_dir / f"{artifact.name}.json", artifact.metadata)
    for writer, suffix in writers:
        with writer:
            writer.start_writing(str(output_dir / f"{artifact.name}.{suffix}"))
            for block in blocks:
                writer.write_block(block)
            stats = writer.finish_writing()
        stats.sidecar_path = str(sidecar)
        results.append(stats)
    return results
