"""
Synthetic grading data, dataset files and dataset repositories.
"""

from swinalign.data.dataset import Dataset, load_dataset, save_dataset
from swinalign.data.file_system_repo import FileSystemDatasetRepository
from swinalign.data.in_memory_repo import InMemoryDatasetRepository
from swinalign.data.repository import DatasetRepository
from swinalign.data.synthetic import DEFAULT_FRACTIONS, SyntheticSpec, generate, split

__all__ = [
    "DEFAULT_FRACTIONS",
    "Dataset",
    "DatasetRepository",
    "FileSystemDatasetRepository",
    "InMemoryDatasetRepository",
    "SyntheticSpec",
    "generate",
    "load_dataset",
    "save_dataset",
    "split",
]
