import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from swinalign.autodiff import ops
from swinalign.autodiff.tensor import Parameter, Tape
from swinalign.training.optimizer import (
    SGD,
    Adam,
    OptimizerConfig,
    OptimizerState,
    adam_step,
    create_optimizer,
)
from swinalign.utils.errors import ConfigError, ContractError


def _minimize_square(optimizer, x, steps):
    for _ in range(steps):
        with Tape() as tape:
            tape.backward(ops.reduce_sum(ops.mul(x, x)))
        optimizer.step()
        optimizer.zero_grad()


def test_first_adam_step_is_sign_normalized():
    p = Parameter([1.0, -2.0])
    p.grad = np.array([0.5, -3.0])
    state = OptimizerState(kind="adam", lr=0.01)
    adam_step(state, [p])
    assert_allclose(p.data - [1.0, -2.0], [-0.01, 0.01], rtol=1e-6)
    assert state.step == 1


def test_zero_gradient_gives_zero_update_and_decaying_moments():
    p = Parameter([1.0])
    state = OptimizerState(kind="adam", lr=0.1)
    p.grad = np.zeros(1)
    adam_step(state, [p])
    assert_array_equal(p.data, [1.0])

    p.grad = np.ones(1)
    adam_step(state, [p])
    first = state.first_moments[0].copy()
    p.grad = np.zeros(1)
    adam_step(state, [p])
    assert_allclose(state.first_moments[0], 0.9 * first)
    assert state.step == 3


def test_adam_minimizes_square():
    x = Parameter([1.0])
    _minimize_square(Adam([x], OptimizerConfig(lr=0.1)), x, 200)
    assert abs(x.data[0]) < 0.05


def test_sgd_step():
    x = Parameter([1.0])
    optimizer = create_optimizer([x], OptimizerConfig(kind="sgd", lr=0.25))
    assert isinstance(optimizer, SGD)
    _minimize_square(optimizer, x, 1)
    assert_allclose(x.data, [0.5])


def test_sgd_momentum_accumulates():
    x = Parameter([1.0])
    optimizer = SGD([x], OptimizerConfig(kind="sgd", lr=0.1, momentum=0.5))
    x.grad = np.ones(1)
    optimizer.step()
    optimizer.step()
    assert_allclose(x.data, [1.0 - 0.1 - 0.15])


@pytest.mark.parametrize("kind", ["adam", "sgd"])
def test_zero_learning_rate_leaves_parameters_unchanged(kind, rng):
    p = Parameter(rng.normal(size=(3, 3)))
    before = p.data.copy()
    optimizer = create_optimizer([p], OptimizerConfig(kind=kind, lr=0.0))
    p.grad = rng.normal(size=(3, 3))
    optimizer.step()
    assert_array_equal(p.data, before)


def test_step_without_gradient_is_a_contract_error():
    with pytest.raises(ContractError):
        Adam([Parameter([1.0], name="w")], OptimizerConfig()).step()


def test_optimizer_config_validation():
    assert OptimizerConfig(kind="ADAM").kind == "adam"
    for bad in (dict(kind="rmsprop"), dict(lr=-1.0), dict(beta1=1.0), dict(eps=0.0), dict(momentum=1.0)):
        with pytest.raises(ConfigError):
            OptimizerConfig(**bad)
