"""Abstract interface for block-wise artifact writers."""

from abc import ABC, abstractmethod

import pandas as pd

from .models import ArtifactStatistics


class ArtifactWriter(ABC):
    """Abstract base class for writing one table file in blocks."""

    @abstractmethod
    def start_writing(self, output_path: str) -> None:
        """Prepare the writer for block writing.

        Args:
            output_path: Final path of the file; nothing appears there before finish_writing()
        """
        pass

    @abstractmethod
    def write_block(self, df: pd.DataFrame) -> None:
        """Append a DataFrame block.

        Args:
            df: Block with the same columns as every previous block
        """
        pass

    @abstractmethod
    def finish_writing(self) -> ArtifactStatistics:
        """Finalize the file atomically and return statistics."""
        pass

    @abstractmethod
    def close(self) -> None:
        """Close the writer and release resources."""
        pass

    def __enter__(self):
        """Context manager entry."""
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        """Context manager exit."""
        self.close()
