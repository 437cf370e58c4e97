"""Two-step cross-attention: weights, ablation switches and order invariance."""

from __future__ import annotations

import math

import numpy as np
import pytest

from src.lib.errors import ArgumentError
from src.services.autograd import ComputeGraph, Tensor
from src.services.data.context import UserContext
from src.services.data.dataset import Sample
from src.services.model.attention import (
    attention_group,
    domain_level_ca,
    init_attention,
    item_level_ca,
    position_weights,
)
from src.services.model.config import ModelConfig
from src.services.model.dacdr import DacdrModel, forward_sample
from src.services.model.params import ParamStore
from src.services.training.gradcheck_suite import tiny_config


def _store(config: ModelConfig, seed: int = 0) -> ParamStore:
    params = ParamStore()
    init_attention(params, config, np.random.default_rng(seed))
    return params


def test_attention_groups_are_named_per_channel_and_step() -> None:
    params = _store(ModelConfig(embed_dim=4, attn_dim=3))
    assert attention_group(1, 2, "v") in params
    assert params[attention_group(0, 1, "q")].shape == (4, 3)
    assert params[attention_group(0, 1, "v")].shape == (4, 4)
    assert len(params) == 2 * 2 * 3


def test_gated_weights_sum_to_one() -> None:
    config = ModelConfig(embed_dim=4, attn_dim=4)
    params = _store(config)
    rng = np.random.default_rng(1)
    for _ in range(1000):
        graph = ComputeGraph()
        n = int(rng.integers(1, 9))
        x = Tensor(rng.normal(size=(n, 4)))
        e_d, e_v = Tensor(rng.normal(size=(1, 4))), Tensor(rng.normal(size=(1, 4)))
        e1, alpha = domain_level_ca(graph, params, config, x, e_d, 0)
        e_z, beta = item_level_ca(graph, params, config, e1, e_v, 0)
        assert alpha.sum() == pytest.approx(1.0, abs=1e-9)
        assert beta.sum() == pytest.approx(1.0, abs=1e-9)
        assert (alpha >= 0.0).all() and (beta >= 0.0).all()
        assert e1.shape == (n, 4)
        assert e_z.shape == (1, 4)


def _identity_store() -> tuple[ModelConfig, ParamStore]:
    config = ModelConfig(embed_dim=1, attn_dim=1, channels=1)
    params = ParamStore()
    for step in (1, 2):
        for part in ("q", "k", "v"):
            params.add(attention_group(0, step, part), np.eye(1))
    return config, params


def test_domain_attention_on_exact_exponentials() -> None:
    config, params = _identity_store()
    x = Tensor([[0.0], [math.log(2.0)]])
    e1, alpha = domain_level_ca(ComputeGraph(), params, config, x, Tensor([[1.0]]), 0)
    assert alpha.tolist() == pytest.approx([1 / 3, 2 / 3], abs=1e-12)
    assert e1.data.ravel().tolist() == pytest.approx([0.0, 2 / 3 * math.log(2.0)], abs=1e-12)


def test_item_attention_on_exact_exponentials() -> None:
    config, params = _identity_store()
    e1 = Tensor([[0.0], [math.log(3.0)]])
    e_z, beta = item_level_ca(ComputeGraph(), params, config, e1, Tensor([[1.0]]), 0)
    assert beta.tolist() == pytest.approx([0.25, 0.75], abs=1e-12)
    assert e_z.shape == (1, 1)
    assert e_z.item() == pytest.approx(0.75 * math.log(3.0), abs=1e-12)


def test_full_ablation_yields_exactly_uniform_weights() -> None:
    config = ModelConfig(embed_dim=4, attn_dim=4, ablation="no_da_ia")
    params = _store(config)
    graph = ComputeGraph()
    x = Tensor(np.random.default_rng(2).normal(size=(4, 4)))
    e1, alpha = domain_level_ca(graph, params, config, x, Tensor(np.ones((1, 4))), 0)
    _, beta = item_level_ca(graph, params, config, e1, Tensor(np.ones((1, 4))), 0)
    assert e1 is x
    assert alpha.tolist() == [0.25] * 4
    assert beta.tolist() == [0.25] * 4


def test_single_step_ablations() -> None:
    rng = np.random.default_rng(3)
    x = Tensor(rng.normal(size=(3, 4)))
    e_d, e_v = Tensor(rng.normal(size=(1, 4))), Tensor(rng.normal(size=(1, 4)))

    no_da = ModelConfig(embed_dim=4, attn_dim=4, ablation="no_da")
    graph = ComputeGraph()
    e1, alpha = domain_level_ca(graph, _store(no_da), no_da, x, e_d, 0)
    _, beta = item_level_ca(graph, _store(no_da), no_da, e1, e_v, 0)
    assert alpha.tolist() == pytest.approx([1 / 3] * 3)
    assert not np.allclose(beta, 1 / 3)

    no_ia = ModelConfig(embed_dim=4, attn_dim=4, ablation="no_ia")
    graph = ComputeGraph()
    e1, alpha = domain_level_ca(graph, _store(no_ia), no_ia, x, e_d, 0)
    _, beta = item_level_ca(graph, _store(no_ia), no_ia, e1, e_v, 0)
    assert not np.allclose(alpha, 1 / 3)
    assert beta.tolist() == pytest.approx([1 / 3] * 3)


def test_literal_semantics_collapse_rows_to_the_key_value() -> None:
    config = ModelConfig(embed_dim=4, attn_dim=4, attention_semantics="literal")
    params = _store(config)
    rng = np.random.default_rng(4)
    graph = ComputeGraph()
    x = Tensor(rng.normal(size=(3, 4)))
    e_d = Tensor(rng.normal(size=(1, 4)))
    e1, alpha = domain_level_ca(graph, params, config, x, e_d, 0)
    expected = e_d.data @ params[attention_group(0, 1, "v")].data
    assert np.allclose(e1.data, np.repeat(expected, 3, axis=0))
    assert alpha.tolist() == pytest.approx([1 / 3] * 3)


def test_position_weights_are_shift_invariant() -> None:
    graph = ComputeGraph()
    scores = np.array([[0.3], [-1.2], [2.0]])
    base = position_weights(graph, Tensor(scores)).data
    shifted = position_weights(graph, Tensor(scores + 11.0)).data
    assert base.shape == (1, 3)
    assert np.allclose(base, shifted, atol=1e-12)


def test_empty_sequence_is_rejected() -> None:
    config = ModelConfig(embed_dim=4, attn_dim=4)
    graph = ComputeGraph()
    with pytest.raises(ArgumentError):
        domain_level_ca(graph, _store(config), config, Tensor(np.zeros((0, 4))), Tensor(np.ones((1, 4))), 0)


def _permuted(sample: Sample, order: list[int]) -> Sample:
    ctx = sample.context
    behavior = tuple(ctx.behavior_seq[i] for i in order)
    side = tuple(ctx.side_seq[i] for i in order)
    return Sample(
        sample.user_id,
        sample.item_id,
        sample.domain_id,
        sample.label,
        sample.timestamp,
        UserContext(ctx.user_id, behavior, side, ctx.cutoff_ts),
    )


@pytest.mark.parametrize("ablation", ["full", "no_da", "no_ia", "no_da_ia"])
def test_prediction_is_bit_identical_under_sequence_permutation(tiny, ablation: str) -> None:
    vocab, samples = tiny
    model = DacdrModel.initialize("dacdr", tiny_config(ablation=ablation), vocab, seed=5)
    rng = np.random.default_rng(6)
    for sample in samples:
        order = list(rng.permutation(len(sample.context)))
        assert model.predict(sample) == model.predict(_permuted(sample, order))


def test_forward_trace_reports_per_channel_weights(tiny) -> None:
    vocab, samples = tiny
    model = DacdrModel.initialize("dacdr", tiny_config(), vocab, seed=0)
    trace = forward_sample(model, samples[0])
    assert len(trace.channels) == 2
    n = len(samples[0].context)
    for channel in trace.channels:
        assert channel.alpha.shape == (n,)
        assert channel.beta.sum() == pytest.approx(1.0, abs=1e-9)
        assert channel.e_z.shape == (4,)
    assert 0.0 < trace.prediction < 1.0
    assert trace.user_embedding.shape == (4,)


def test_attention_invariants_over_random_samples(tiny) -> None:
    vocab, _ = tiny
    full = DacdrModel.initialize("dacdr", tiny_config(), vocab, seed=7)
    pooled = DacdrModel.initialize("no_da_ia", tiny_config(ablation="no_da_ia"), vocab, seed=7)
    items = [f"s{i}" for i in range(6)]
    categories = ["c0", "c1", "c2"]
    rng = np.random.default_rng(8)
    for index in range(1000):
        n = int(rng.integers(1, 9))
        behavior = tuple(str(item) for item in rng.choice(items, size=n))
        side = tuple(categories[int(item[1:]) % len(categories)] for item in behavior)
        user = f"u{index % 4}"
        sample = Sample(
            user,
            f"t{int(rng.integers(0, 4))}",
            "target",
            float(index % 2),
            index,
            UserContext(user, behavior, side, None),
        )
        trace = forward_sample(full, sample)
        for channel in trace.channels:
            assert channel.alpha.sum() == pytest.approx(1.0, abs=1e-9)
            assert channel.beta.sum() == pytest.approx(1.0, abs=1e-9)
            assert (channel.alpha >= 0.0).all() and (channel.beta >= 0.0).all()
        order = list(rng.permutation(n))
        assert full.predict(_permuted(sample, order)) == trace.prediction
        for channel in forward_sample(pooled, sample).channels:
            assert channel.alpha.tolist() == [1.0 / n] * n
            assert channel.beta.tolist() == [1.0 / n] * n
