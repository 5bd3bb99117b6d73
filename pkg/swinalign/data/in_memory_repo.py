"""
InMemoryDatasetRepository for swinalign.

Keeps copies of the splits in a dict; ``swinalign ablation --generate`` holds
its freshly generated splits here.
"""

from typing import Dict, List, Optional

from swinalign.data.dataset import Dataset
from swinalign.data.repository import DatasetRepository
from swinalign.utils.constants import Splits


class InMemoryDatasetRepository(DatasetRepository):

    def __init__(self):
        self._splits: Dict[str, Dataset] = {}

    def save(self, dataset: Dataset) -> None:
        self._splits[dataset.split] = Dataset(dataset.images.copy(), dataset.labels.copy(), dataset.split)

    def load(self, split: str) -> Optional[Dataset]:
        return self._splits.get(split)

    def list_splits(self) -> List[str]:
        return [s for s in Splits.ALL if s in self._splits]

    def delete(self, split: str) -> None:
        self._splits.pop(split, None)

    def __repr__(self) -> str:
        return f"InMemoryDatasetRepository({self.list_splits()})"
