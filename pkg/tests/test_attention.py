import math

import pytest
import torch

from roadworld.diffusion.attention import (
    AxisAttention,
    CrossAttention,
    GatedSelfAttention,
    TemporalAttention,
    ViewAttention,
    single_head_attention,
    view_adjacency_mask,
)


def softmax_attention_oracle(q, k, v):
    """Standalone scalar-loop softmax attention for tiny inputs."""
    lq, d = q.shape
    lk = k.shape[0]
    out = torch.zeros(lq, d, dtype=q.dtype)
    for i in range(lq):
        logits = [sum(float(q[i, a]) * float(k[j, a]) for a in range(d)) / math.sqrt(d) for j in range(lk)]
        m = max(logits)
        weights = [math.exp(l - m) for l in logits]
        s = sum(weights)
        for j in range(lk):
            out[i] += (weights[j] / s) * v[j]
    return out


class TestGatedSelfAttention:
    def test_zero_gate_is_exact_identity(self):
        torch.manual_seed(0)
        layer = GatedSelfAttention(8, 4)
        # randomize everything except the gate: identity must come from tanh(0)
        for p in layer.parameters():
            if p is not layer.gate:
                torch.nn.init.normal_(p)
        v = torch.randn(2, 6, 8)
        hp = torch.randn(2, 3, 4)
        assert torch.equal(layer(v, hp), v)

    def test_token_selection_preserves_visual_count(self):
        layer = GatedSelfAttention(8, 4)
        v = torch.randn(1, 5, 8)
        for n_boxes in (1, 3, 9):
            out = layer(v, torch.randn(1, n_boxes, 4))
            assert out.shape == v.shape

    def test_large_gate_shifts_output(self):
        torch.manual_seed(1)
        layer = GatedSelfAttention(8, 4)
        for p in layer.parameters():
            torch.nn.init.normal_(p)
        with torch.no_grad():
            layer.gate.fill_(5.0)
        v = torch.randn(1, 4, 8)
        hp = torch.randn(1, 2, 4) * 3
        shifted = layer(v, hp)
        with torch.no_grad():
            layer.gate.fill_(0.0)
        assert (shifted - layer(v, hp)).norm() > 0

    def test_dim_mismatch_raises(self):
        layer = GatedSelfAttention(8, 4)
        with pytest.raises(ValueError):
            layer(torch.randn(1, 4, 8), torch.randn(1, 2, 6))


class TestAxisAttention:
    def test_zero_init_is_identity(self):
        layer = TemporalAttention(8)
        x = torch.randn(3, 8, 2, 2)
        assert torch.equal(layer(x), x)

    def test_permutation_equivariance_without_positions(self):
        torch.manual_seed(0)
        layer = AxisAttention(8, use_positions=False)
        for p in layer.parameters():
            torch.nn.init.normal_(p)
        x = torch.randn(5, 8, 3, 4)
        perm = torch.tensor([3, 0, 4, 1, 2])
        assert (layer(x)[perm] - layer(x[perm])).abs().max() < 1e-5

    def test_two_token_attention_matches_softmax_oracle(self):
        torch.manual_seed(2)
        layer = AxisAttention(4, use_positions=False)
        for p in layer.parameters():
            torch.nn.init.normal_(p)
        x = torch.randn(2, 4, 1, 1, dtype=torch.float64)
        layer.double()
        with torch.no_grad():
            seq = layer.norm(x.reshape(2, 4))
            q, k, v = layer.qkv(seq).chunk(3, dim=-1)
            expected = x.reshape(2, 4) + layer.out(softmax_attention_oracle(q, k, v))
            got = layer(x).reshape(2, 4)
        assert torch.allclose(got, expected, atol=1e-6)

    def test_single_view_equals_single_frame_under_shared_weights(self):
        torch.manual_seed(3)
        temporal = AxisAttention(8, use_positions=False)
        for p in temporal.parameters():
            torch.nn.init.normal_(p)
        view = ViewAttention(8, n_views=1)
        view.load_state_dict(temporal.state_dict(), strict=False)
        x = torch.randn(1, 8, 2, 3)
        assert torch.allclose(view(x), temporal(x), atol=1e-7)


class TestViewAttention:
    def test_line_adjacency_mask_v3(self):
        mask = view_adjacency_mask(3, "line")
        expected = torch.tensor(
            [[True, True, False], [True, True, True], [False, True, True]]
        )
        assert torch.equal(mask, expected)

    def test_ring_adjacency_wraps(self):
        mask = view_adjacency_mask(4, "ring")
        assert mask[0, 3] and mask[3, 0]
        assert not mask[0, 2]

    def test_masked_positions_get_zero_weight(self):
        torch.manual_seed(4)
        layer = ViewAttention(3, n_views=3, topology="line")
        for p in layer.parameters():
            torch.nn.init.normal_(p)
        x = torch.randn(3, 3, 2, 2)
        w = layer.attention_weights(x, layer.mask)
        assert w.shape[-2:] == (3, 3)
        assert torch.all(w[:, 0, 2] == 0.0)
        assert torch.all(w[:, 2, 0] == 0.0)
        assert torch.all(w[:, 1] > 0.0)
        assert torch.allclose(w.sum(-1), torch.ones_like(w.sum(-1)))


class TestCrossAttention:
    def test_zero_init_identity_and_context_sensitivity(self):
        torch.manual_seed(5)
        layer = CrossAttention(8, 6)
        v = torch.randn(1, 4, 8)
        ctx = torch.randn(1, 2, 6)
        assert torch.equal(layer(v, ctx), v)
        for p in layer.parameters():
            torch.nn.init.normal_(p)
        a = layer(v, ctx)
        b = layer(v, ctx * 2 + 1)
        assert (a - b).norm() > 0


def test_single_head_attention_uniform_when_keys_equal():
    q = torch.randn(1, 2, 4)
    k = torch.zeros(1, 3, 4)
    v = torch.stack([torch.zeros(3, 4) + torch.tensor([1.0, 2.0, 3.0]).reshape(3, 1)], dim=0)
    out = single_head_attention(q, k, v)
    assert torch.allclose(out, torch.full_like(out, 2.0))
