"""
DatasetRepository for swinalign.

Defines an abstract class describing how to store and retrieve the splits of
one dataset.
"""

import abc
from typing import List, Optional

from swinalign.data.dataset import Dataset


class DatasetRepository(abc.ABC):
    """
    Abstract interface for storing and retrieving dataset splits, keyed by
    their split tag.
    """

    @abc.abstractmethod
    def save(self, dataset: Dataset) -> None:
        """
        Store a split, replacing any stored split with the same tag.
        """
        pass

    @abc.abstractmethod
    def load(self, split: str) -> Optional[Dataset]:
        """
        :param split: Split tag to fetch.
        :return: The Dataset if stored, else None.
        """
        pass

    @abc.abstractmethod
    def list_splits(self) -> List[str]:
        """
        :return: Tags of the stored splits, in train/val/test order.
        """
        pass

    @abc.abstractmethod
    def delete(self, split: str) -> None:
        pass

    def require(self, split: str) -> Dataset:
        """Like load(), but a missing split is an error."""
        dataset = self.load(split)
        if dataset is None:
            raise FileNotFoundError(f"No '{split}' split in {self!r}")
        return dataset
