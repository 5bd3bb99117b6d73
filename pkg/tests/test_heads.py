import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from swinalign.autodiff.tensor import Tensor
from swinalign.heads import (
    HeadConfig,
    HeadRegistry,
    MLPRegressorHead,
    MultiPredictionHead,
    SinglePredictionHead,
    aggregate_decision_features,
    decide_grade,
    default_registry,
    head_forward,
    predict,
    regressor_decide,
)
from swinalign.heads.mphn import ClassifierHead
from swinalign.utils.errors import ConfigError, DimensionError


def test_head_forward_with_zero_parameters(rng):
    head = ClassifierHead(0, 6, 5, 3, rng)
    for layer in (head.layer1, head.layer2):
        layer.weight.data = np.zeros_like(layer.weight.data)
    assert_array_equal(head_forward(Tensor(rng.normal(size=(2, 6))), head).data, np.zeros((2, 3)))


def test_head_forward_rejects_wrong_width(rng):
    with pytest.raises(DimensionError):
        head_forward(Tensor(np.zeros((1, 4))), ClassifierHead(0, 6, 5, 3, rng))


def test_predict_examples():
    assert predict(Tensor([0.3, -1.0]), Tensor([0.0, 0.0])).item() == 0.5
    e1 = Tensor([1.0, 0.0, 0.0])
    assert_allclose(predict(e1, Tensor([math.log(3.0), 0.0, 0.0])).item(), 0.75, rtol=1e-12)
    with pytest.raises(DimensionError):
        predict(e1, Tensor([1.0, 2.0]))


def test_aggregate_decision_features():
    v = Tensor([[1.0, -2.0]])
    assert_array_equal(aggregate_decision_features([v, v, v]).data, v.data)
    mean = aggregate_decision_features([Tensor([1.0, 0.0]), Tensor([0.0, 1.0])])
    assert_array_equal(mean.data, [0.5, 0.5])
    with pytest.raises(DimensionError):
        aggregate_decision_features([Tensor([1.0]), Tensor([1.0, 2.0])])


@pytest.mark.parametrize(
    "probabilities, grade",
    [
        ([0.1, 0.2, 0.9, 0.3, 0.1], 2),
        ([0.5, 0.5, 0.2, 0.2, 0.2], 0),
        ([0.0, 0.0, 0.0, 0.0, 1.0], 4),
    ],
)
def test_decide_grade(probabilities, grade):
    assert decide_grade(probabilities) == grade


@pytest.mark.parametrize("prediction, grade", [(2.4, 2), (-0.7, 0), (9.0, 4), (2.5, 2), (2.51, 3), (0.5, 0)])
def test_regressor_decide(prediction, grade):
    assert regressor_decide(prediction, 5) == grade


def test_multi_head_outputs(rng):
    head = MultiPredictionHead(HeadConfig(kind="mphn", hidden_dim=6), 8, 4, rng)
    outputs = head(Tensor(rng.normal(size=(3, 8))))
    assert outputs.scores.shape == (3, 5)
    assert outputs.aggregated.shape == (3, 4)
    assert len(outputs.decision_features) == 5
    assert_allclose(outputs.probabilities.data, 1.0 / (1.0 + np.exp(-outputs.scores.data)))
    assert head.decide(outputs).shape == (3,)


def test_decision_makers_are_independent(rng):
    head = MultiPredictionHead(HeadConfig(kind="mphn", hidden_dim=6), 8, 4, rng)
    features = Tensor(rng.normal(size=(2, 8)))
    before = head(features).decision_features[0].data
    head.heads[1].layer1.weight.data = head.heads[1].layer1.weight.data + 1.0
    after = head(features)
    assert_array_equal(after.decision_features[0].data, before)


def test_single_head_with_zero_final_layer_is_uniform(rng):
    head = SinglePredictionHead(HeadConfig(kind="sphn", hidden_dim=6), 8, 4, rng)
    head.layer3.weight.data = np.zeros_like(head.layer3.weight.data)
    outputs = head(Tensor(rng.normal(size=(2, 8))))
    assert_allclose(outputs.probabilities.data, np.full((2, 5), 0.2))
    assert outputs.aggregated.shape == (2, 4)


def test_regressor_head_score_peaks_at_predicted_grade(rng):
    head = MLPRegressorHead(HeadConfig(kind="mlpreg", hidden_dim=6), 8, 4, rng)
    outputs = head(Tensor(rng.normal(size=(2, 8))))
    assert outputs.scores.shape == (2, 1)
    assert outputs.probabilities is None
    scores = np.stack([head.score(outputs, k).data for k in range(5)], axis=1)
    assert_array_equal(np.argmax(scores, axis=1), head.decide(outputs))


def test_head_rejects_wrong_input(rng):
    head = SinglePredictionHead(HeadConfig(kind="sphn"), 8, 4, rng)
    with pytest.raises(DimensionError):
        head(Tensor(np.zeros((2, 7))))


def test_head_config_validation():
    assert HeadConfig(kind="MPHN").kind == "mphn"
    with pytest.raises(ConfigError):
        HeadConfig(kind="ordinal")
    with pytest.raises(ConfigError):
        HeadConfig(num_classes=1)


def test_registry_builds_every_kind(rng):
    assert default_registry.list_kinds() == ["mlpreg", "mphn", "sphn"]
    for kind, expected in (("mphn", MultiPredictionHead), ("sphn", SinglePredictionHead), ("mlpreg", MLPRegressorHead)):
        head = default_registry.create(HeadConfig(kind=kind), 8, 4, rng)
        assert isinstance(head, expected)
        assert head.kind == kind


def test_empty_registry_rejects_kinds(rng):
    registry = HeadRegistry(defaults=False)
    assert registry.get("mphn") is None
    with pytest.raises(ConfigError):
        registry.create(HeadConfig(kind="mphn"), 8, 4, rng)
    registry.register(MultiPredictionHead)
    assert registry.list_kinds() == ["mphn"]
