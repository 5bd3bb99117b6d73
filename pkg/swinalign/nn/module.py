"""
Module base class for swinalign.

A Module owns Parameters and child Modules. Both are registered automatically
on attribute assignment, in assignment order, which makes parameter names
(dotted attribute paths such as ``stage2.block1.attn.qkv.weight``) stable and
the checkpoint layout deterministic.
"""

import abc
from collections import OrderedDict
from typing import Dict, Iterator, List, Tuple

import numpy as np

from swinalign.autodiff.tensor import Parameter
from swinalign.utils.errors import ConfigError, DimensionError


class Module(abc.ABC):
    """
    Abstract base class for all model components.

    Concrete modules assign Parameters and sub-Modules as attributes in
    __init__ and implement forward().
    """

    # Transparent modules do not add their attribute name to parameter paths.
    transparent = False

    def __init__(self):
        object.__setattr__(self, "_parameters", OrderedDict())
        object.__setattr__(self, "_modules", OrderedDict())

    def __setattr__(self, name, value):
        if isinstance(value, Parameter):
            self._parameters[name] = value
        elif isinstance(value, Module):
            self._modules[name] = value
        object.__setattr__(self, name, value)

    @abc.abstractmethod
    def forward(self, *args, **kwargs):
        raise NotImplementedError("Subclasses must implement forward().")

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        for name, parameter in self._parameters.items():
            yield prefix + name, parameter
        for name, module in self._modules.items():
            child_prefix = prefix if module.transparent else prefix + name + "."
            yield from module.named_parameters(child_prefix)

    def parameters(self) -> List[Parameter]:
        return [p for _, p in self.named_parameters()]

    def assign_names(self) -> None:
        """Stamp every parameter with its dotted path; names must be unique."""
        seen = set()
        for name, parameter in self.named_parameters():
            if name in seen:
                raise ConfigError(f"Duplicate parameter name '{name}'")
            seen.add(name)
            parameter.name = name

    def zero_grad(self) -> None:
        for parameter in self.parameters():
            parameter.zero_grad()

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def state_dict(self) -> "OrderedDict[str, np.ndarray]":
        return OrderedDict((name, p.data.copy()) for name, p in self.named_parameters())

    def load_state_dict(self, state: Dict[str, np.ndarray], strict: bool = True) -> None:
        """
        Copy values into the parameters.

        :param state: Mapping from parameter name to array.
        :param strict: Reject missing or unexpected names.
        """
        own = OrderedDict(self.named_parameters())
        if strict:
            missing = [name for name in own if name not in state]
            unexpected = [name for name in state if name not in own]
            if missing or unexpected:
                raise ConfigError(
                    f"State does not match the model: missing {missing}, unexpected {unexpected}"
                )
        for name, value in state.items():
            if name not in own:
                continue
            value = np.asarray(value, dtype=np.float64)
            if value.shape != own[name].shape:
                raise DimensionError(
                    f"Parameter '{name}' has shape {own[name].shape}, state holds {value.shape}"
                )
            own[name].data = value.copy()
            own[name].grad = None

