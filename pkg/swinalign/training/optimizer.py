"""
Optimizers for swinalign.

Adam with bias correction and plain/momentum SGD over a list of Parameters.
Updates rebind ``parameter.data`` to a fresh array, so a zero learning rate
leaves every parameter bitwise unchanged.
"""

import abc
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from swinalign.autodiff.tensor import Parameter
from swinalign.utils.constants import OptimizerKinds
from swinalign.utils.errors import ConfigError, ContractError


@dataclass
class OptimizerConfig:
    """
    Configuration data for an optimizer.
    """
    kind: str = OptimizerKinds.ADAM
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    momentum: float = 0.0

    def __post_init__(self):
        self.kind = self.kind.lower()
        if self.kind not in OptimizerKinds.ALL:
            raise ConfigError(f"Unknown optimizer '{self.kind}'. Expected one of {OptimizerKinds.ALL}.")
        if self.lr < 0:
            raise ConfigError("optimizer.lr must be non-negative.")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError("Adam betas must lie in [0, 1).")
        if self.eps <= 0:
            raise ConfigError("optimizer.eps must be positive.")
        if not 0 <= self.momentum < 1:
            raise ConfigError("optimizer.momentum must lie in [0, 1).")


@dataclass
class OptimizerState:
    """
    Attributes:
        kind (str): adam or sgd.
        lr (float): Learning rate.
        beta1, beta2, eps (float): Adam constants.
        first_moments, second_moments (dict): Per-parameter accumulators keyed
                                              by parameter position.
        step (int): Number of completed updates.
    """
    kind: str
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    first_moments: Dict[int, np.ndarray] = field(default_factory=dict)
    second_moments: Dict[int, np.ndarray] = field(default_factory=dict)
    step: int = 0


def _check_grads(params: Sequence[Parameter]) -> None:
    for p in params:
        if p.grad is None:
            raise ContractError(f"Parameter '{p.name}' has no gradient; run backward first")


def adam_step(state: OptimizerState, params: Sequence[Parameter]) -> None:
    """
    One bias-corrected Adam update of ``params`` in order.

    m <- b1 m + (1 - b1) g;  v <- b2 v + (1 - b2) g^2
    p <- p - lr * m_hat / (sqrt(v_hat) + eps)
    """
    _check_grads(params)
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    for i, p in enumerate(params):
        g = p.grad
        m = state.first_moments.get(i)
        v = state.second_moments.get(i)
        if m is None:
            m, v = np.zeros_like(p.data), np.zeros_like(p.data)
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        state.first_moments[i], state.second_moments[i] = m, v
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        p.data = p.data - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


def sgd_step(state: OptimizerState, params: Sequence[Parameter], momentum: float = 0.0) -> None:
    """p <- p - lr * (momentum buffer or gradient)."""
    _check_grads(params)
    state.step += 1
    for i, p in enumerate(params):
        direction = p.grad
        if momentum:
            buffer = state.first_moments.get(i)
            direction = p.grad if buffer is None else momentum * buffer + p.grad
            state.first_moments[i] = direction
        p.data = p.data - state.lr * direction


class Optimizer(abc.ABC):
    """
    Abstract optimizer over a fixed, ordered list of parameters.
    """

    def __init__(self, params: Sequence[Parameter], config: OptimizerConfig):
        self.params: List[Parameter] = list(params)
        self.config = config
        self.state = OptimizerState(
            kind=config.kind, lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.eps
        )

    @abc.abstractmethod
    def step(self) -> None:
        """Apply one update from the current gradients."""
        pass

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()


class Adam(Optimizer):
    def step(self) -> None:
        adam_step(self.state, self.params)


class SGD(Optimizer):
    def step(self) -> None:
        sgd_step(self.state, self.params, self.config.momentum)


def create_optimizer(params: Sequence[Parameter], config: OptimizerConfig) -> Optimizer:
    if config.kind == OptimizerKinds.ADAM:
        return Adam(params, config)
    return SGD(params, config)
