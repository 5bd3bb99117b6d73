import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from swinalign.autodiff import ops
from swinalign.autodiff.gradcheck import finite_diff_check
from swinalign.autodiff.tensor import Parameter, Tape, Tensor, no_grad
from swinalign.backbone.blocks import PatchEmbed, PatchMerging, SwinBlock
from swinalign.backbone.config import BackboneConfig
from swinalign.backbone.swin import SwinBackbone, SwinStage, backbone_forward
from swinalign.utils.errors import ConfigError, DimensionError

from conftest import micro_backbone


def test_patch_embed_shape(rng):
    embed = PatchEmbed(4, 3, 16, rng)
    assert embed(Tensor(rng.uniform(size=(1, 64, 64, 3)))).shape == (1, 16, 16, 16)


def test_zero_image_gives_zero_tokens(rng):
    embed = PatchEmbed(4, 3, 16, rng)
    assert not embed(Tensor(np.zeros((2, 8, 8, 3)))).data.any()


def test_patch_embed_rejects_indivisible_image(rng):
    with pytest.raises(ConfigError):
        PatchEmbed(4, 3, 8, rng)(Tensor(np.zeros((1, 6, 6, 3))))


def test_config_rejects_bad_layouts():
    with pytest.raises(ConfigError):
        BackboneConfig(image_size=62)
    with pytest.raises(ConfigError):
        BackboneConfig(depths=[2, 2], num_heads=[1])
    with pytest.raises(ConfigError):
        BackboneConfig(image_size=24, patch_size=4, depths=[1, 1], num_heads=[1, 2], window_size=4)


def test_shift_schedule():
    config = BackboneConfig()
    assert [config.shift_size(s) for s in range(1, 5)] == [1, 1, 1, 0]


def _zeroed_block(rng, shift):
    block = SwinBlock(dim=4, resolution=4, num_heads=1, window_size=2, shift_size=shift, mlp_ratio=2.0, rng=rng)
    block.attn.proj.weight.data = np.zeros_like(block.attn.proj.weight.data)
    block.mlp.fc2.weight.data = np.zeros_like(block.mlp.fc2.weight.data)
    return block


@pytest.mark.parametrize("shift", [0, 1])
def test_block_with_zero_output_projections_is_identity(rng, shift):
    block = _zeroed_block(rng, shift)
    x = rng.normal(size=(2, 4, 4, 4))
    assert_array_equal(block(Tensor(x)).data, x)


def test_shifted_block_matches_unshifted_on_constant_map():
    token = np.random.default_rng(7).normal(size=4)
    x = Tensor(np.broadcast_to(token, (1, 4, 4, 4)).copy())
    plain = SwinBlock(4, 4, 1, 2, 0, 4.0, np.random.default_rng(3))
    shifted = SwinBlock(4, 4, 1, 2, 1, 4.0, np.random.default_rng(3))
    assert_allclose(shifted(x).data, plain(x).data, atol=1e-12)


def test_patch_merge_shape_and_constant_map(rng):
    merge = PatchMerging(16, rng)
    assert merge(Tensor(rng.normal(size=(1, 8, 8, 16)))).shape == (1, 4, 4, 32)
    token = rng.normal(size=8)
    out = PatchMerging(8, rng)(Tensor(np.broadcast_to(token, (1, 4, 4, 8)).copy())).data
    assert_allclose(out, np.broadcast_to(out[0, 0, 0], out.shape), atol=1e-12)


def test_patch_merge_channel_order(rng):
    merge = PatchMerging(1, rng)
    merge.norm.affine = False
    merge.reduction.weight.data = np.eye(4)[:, :2]
    x = np.array([[1.0, 3.0], [2.0, 4.0]]).reshape(1, 2, 2, 1)
    # Order (0,0), (1,0), (0,1), (1,1) gives the values 1, 2, 3, 4 before normalization.
    out = merge(Tensor(x)).data.reshape(-1)
    normalized = ops.layer_normalize(Tensor([1.0, 2.0, 3.0, 4.0])).data
    assert_allclose(out, normalized[:2])


def test_patch_merge_rejects_odd_map(rng):
    with pytest.raises(ConfigError):
        PatchMerging(4, rng)(Tensor(np.zeros((1, 3, 3, 4))))


def test_default_stage_shapes(rng):
    backbone = SwinBackbone(BackboneConfig(), np.random.default_rng(0))
    out = backbone_forward(Tensor(rng.uniform(size=(1, 64, 64, 3))), backbone)
    assert [m.shape for m in out.stage_maps] == [
        (1, 16, 16, 16), (1, 8, 8, 32), (1, 4, 4, 64), (1, 2, 2, 128),
    ]
    assert out.final is out.stage_maps[-1]


def test_backbone_rejects_wrong_image_size():
    backbone = SwinBackbone(micro_backbone(), np.random.default_rng(0))
    with pytest.raises(DimensionError):
        backbone(Tensor(np.zeros((1, 32, 32, 3))))


def test_same_seed_gives_bitwise_equal_outputs(micro_images):
    outputs = [
        SwinBackbone(micro_backbone(), np.random.default_rng(5))(Tensor(micro_images)).final.data
        for _ in range(2)
    ]
    assert_array_equal(outputs[0], outputs[1])


def test_parameter_names_follow_stage_layout():
    backbone = SwinBackbone(micro_backbone(), np.random.default_rng(0))
    backbone.assign_names()
    names = [p.name for p in backbone.parameters()]
    assert names[0] == "patch_embed.proj.weight"
    assert "stage1.block1.attn.qkv.weight" in names
    assert "stage1.block1.attn.relative_position_bias_table" in names
    assert "stage2.merge.reduction.weight" in names
    assert "stage2.merge.reduction.bias" not in names


def test_every_backbone_parameter_gets_gradient(micro_images, rng):
    backbone = SwinBackbone(micro_backbone(), np.random.default_rng(0))
    backbone.assign_names()
    with Tape() as tape:
        final = backbone(Tensor(micro_images)).final
        weights = Tensor(rng.normal(size=final.shape))
        tape.backward(ops.reduce_sum(ops.mul(final, weights)), backbone.parameters())
    dead = [p.name for p in backbone.parameters() if not np.any(p.grad != 0)]
    assert dead == []


def test_resume_reproduces_the_later_stages(micro_images):
    backbone = SwinBackbone(micro_backbone(), np.random.default_rng(0))
    full = backbone(Tensor(micro_images)).stage_maps
    resumed = backbone.resume(full[:1]).stage_maps
    assert resumed[0] is full[0]
    assert_array_equal(resumed[1].data, full[1].data)
    with pytest.raises(DimensionError):
        backbone.resume([])


def _check_with_readout(module, x, rng):
    with no_grad():
        readout = Tensor(rng.normal(size=module(x).shape))
    return finite_diff_check(lambda: ops.reduce_sum(ops.mul(module(x), readout)), [x] + module.parameters(), tol=1e-4)


def test_shifted_block_gradients_match_finite_differences(rng):
    block = SwinBlock(dim=4, resolution=4, num_heads=2, window_size=2, shift_size=1, mlp_ratio=2.0, rng=rng)
    table = block.attn.relative_position_bias_table
    table.data = rng.normal(scale=0.1, size=table.shape)
    x = Parameter(rng.normal(size=(2, 4, 4, 4)), name="x")
    report = _check_with_readout(block, x, rng)
    assert report.passed, report.worst
    assert report.entries_checked == x.size + block.num_parameters()


def test_two_block_stage_gradients_match_finite_differences(rng):
    config = BackboneConfig(
        image_size=16, in_channels=3, patch_size=2, embed_dim=4,
        depths=[1, 2], num_heads=[1, 2], window_size=2, mlp_ratio=2.0,
    )
    stage = SwinStage(config, 2, rng)
    assert [block.shift_size for block in stage.blocks] == [0, 1]
    for block in stage.blocks:
        table = block.attn.relative_position_bias_table
        table.data = rng.normal(scale=0.1, size=table.shape)
    x = Parameter(rng.normal(size=(1, 8, 8, 4)), name="x")
    report = _check_with_readout(stage, x, rng)
    assert report.passed, report.worst
    assert report.entries_checked == x.size + stage.num_parameters()
