"""
FileSystemDatasetRepository for swinalign.

Stores each split as ``<split>.kdst`` under a base directory.
"""

import os
from typing import List, Optional

from swinalign.data.dataset import Dataset, load_dataset, save_dataset
from swinalign.data.repository import DatasetRepository
from swinalign.utils.constants import Splits


class FileSystemDatasetRepository(DatasetRepository):
    """Maintains dataset splits as KDST files on disk."""

    def __init__(self, base_path: str):
        """Initialize the repository with a base directory path."""
        self.base_path = base_path
        os.makedirs(base_path, exist_ok=True)

    def _split_file_path(self, split: str) -> str:
        return os.path.join(self.base_path, f"{split}.kdst")

    def save(self, dataset: Dataset) -> None:
        save_dataset(dataset, self._split_file_path(dataset.split))

    def load(self, split: str) -> Optional[Dataset]:
        file_path = self._split_file_path(split)
        if not os.path.exists(file_path):
            return None
        return load_dataset(file_path)

    def list_splits(self) -> List[str]:
        return [s for s in Splits.ALL if os.path.exists(self._split_file_path(s))]

    def delete(self, split: str) -> None:
        file_path = self._split_file_path(split)
        if os.path.exists(file_path):
            os.remove(file_path)

    def __repr__(self) -> str:
        return f"FileSystemDatasetRepository({self.base_path!r})"
