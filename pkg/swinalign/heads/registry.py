"""
HeadRegistry for swinalign.

Maps a head kind to the PredictionHead class that implements it and builds
heads from a HeadConfig.
"""

from typing import Dict, List, Optional, Type

import numpy as np

from swinalign.heads.head import HeadConfig, PredictionHead
from swinalign.heads.mphn import MultiPredictionHead
from swinalign.heads.regressor import MLPRegressorHead
from swinalign.heads.sphn import SinglePredictionHead
from swinalign.utils.errors import ConfigError


class HeadRegistry:
    """
    HeadRegistry holds the known head classes and provides methods to
    register, look up and instantiate them at runtime.
    """

    def __init__(self, defaults: bool = True):
        """
        :param defaults: Register the built-in mphn, sphn and mlpreg heads.
        """
        self._heads: Dict[str, Type[PredictionHead]] = {}
        if defaults:
            for head_class in (MultiPredictionHead, SinglePredictionHead, MLPRegressorHead):
                self.register(head_class)

    def register(self, head_class: Type[PredictionHead]) -> None:
        """
        Register (or replace) a head class under its ``kind``.

        :param head_class: A PredictionHead subclass with a non-empty kind.
        """
        if not head_class.kind:
            raise ConfigError(f"{head_class.__name__} does not declare a head kind")
        self._heads[head_class.kind] = head_class

    def get(self, kind: str) -> Optional[Type[PredictionHead]]:
        """
        :return: The head class registered for ``kind``, else None.
        """
        return self._heads.get(kind.lower())

    def list_kinds(self) -> List[str]:
        return sorted(self._heads)

    def create(
        self,
        config: HeadConfig,
        in_dim: int,
        embed_dim: int,
        rng: np.random.Generator,
    ) -> PredictionHead:
        """
        Build the head described by ``config``.

        :param in_dim: Width of the fused representation, S * d_e.
        :param embed_dim: Penultimate width d_e.
        """
        head_class = self.get(config.kind)
        if head_class is None:
            raise ConfigError(f"No head registered for kind '{config.kind}'. Known: {self.list_kinds()}")
        return head_class(config, in_dim, embed_dim, rng)


default_registry = HeadRegistry()
