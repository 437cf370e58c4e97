"""Tape semantics and numeric behaviour of the autograd engine."""

from __future__ import annotations

import math

import numpy as np
import pytest

from src.lib.errors import ArgumentError, EmbeddingIndexError, NonFiniteError, ShapeError
from src.services.autograd import ComputeGraph, Tensor, grad_check, sigmoid_values


def _leaf(values) -> Tensor:
    return Tensor(values, requires_grad=True)


def test_tensor_is_always_two_dimensional() -> None:
    assert Tensor(3.0).shape == (1, 1)
    assert Tensor([1.0, 2.0, 3.0]).shape == (1, 3)
    with pytest.raises(ShapeError):
        Tensor(np.zeros((2, 2, 2)))


def test_tensor_rejects_non_finite_values() -> None:
    with pytest.raises(NonFiniteError):
        Tensor([1.0, float("nan")])


def test_matmul_values_and_gradients() -> None:
    graph = ComputeGraph()
    a = _leaf([[1.0, 2.0]])
    b = _leaf([[3.0], [4.0]])
    out = graph.matmul(a, b)
    assert out.item() == 11.0
    graph.backward(out)
    assert a.grad.tolist() == [[3.0, 4.0]]
    assert b.grad.tolist() == [[1.0], [2.0]]


def test_matmul_shape_mismatch() -> None:
    graph = ComputeGraph()
    with pytest.raises(ShapeError):
        graph.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


def test_matmul_is_associative_within_tolerance() -> None:
    rng = np.random.default_rng(4)
    a, b, c = (Tensor(rng.normal(size=shape)) for shape in ((3, 4), (4, 5), (5, 2)))
    graph = ComputeGraph()
    left = graph.matmul(graph.matmul(a, b), c)
    right = graph.matmul(a, graph.matmul(b, c))
    assert np.allclose(left.data, right.data, rtol=0.0, atol=1e-12)


def test_softmax_rows_sum_to_one_and_shift_invariant() -> None:
    graph = ComputeGraph()
    x = Tensor([[1.0, 2.0, 3.0], [1000.0, 1000.0, 1000.0]])
    probs = graph.softmax_rows(x).data
    assert probs.sum(axis=1) == pytest.approx([1.0, 1.0], abs=1e-12)
    assert probs[1].tolist() == pytest.approx([1 / 3, 1 / 3, 1 / 3])
    shifted = graph.softmax_rows(Tensor(x.data + 7.5)).data
    assert np.allclose(probs, shifted, atol=1e-12)


def test_softmax_of_zero_and_log_two() -> None:
    probs = ComputeGraph().softmax_rows(Tensor([[0.0, math.log(2.0)]])).data
    assert probs[0].tolist() == pytest.approx([1 / 3, 2 / 3], abs=1e-12)


def test_softmax_survives_extreme_logits() -> None:
    graph = ComputeGraph()
    probs = graph.softmax_rows(Tensor([[-1e4, 0.0, 1e4]])).data
    assert probs.tolist() == [[0.0, 0.0, 1.0]]


def test_sigmoid_stays_strictly_inside_unit_interval() -> None:
    values = sigmoid_values(np.array([-800.0, 0.0, 800.0]))
    assert 0.0 < values[0] < 1e-300
    assert values[1] == 0.5
    assert values[2] < 1.0


def test_elementwise_dispatch() -> None:
    graph = ComputeGraph()
    a, b = Tensor([[1.0, -2.0]]), Tensor([[3.0, 4.0]])
    assert graph.elementwise("add", a, b).data.tolist() == [[4.0, 2.0]]
    assert graph.elementwise("sub", a, b).data.tolist() == [[-2.0, -6.0]]
    assert graph.elementwise("hadamard", a, b).data.tolist() == [[3.0, -8.0]]
    assert graph.elementwise("scale", a, factor=2.0).data.tolist() == [[2.0, -4.0]]
    assert graph.elementwise("relu", a).data.tolist() == [[1.0, 0.0]]
    with pytest.raises(ArgumentError):
        graph.elementwise("add", a)
    with pytest.raises(ArgumentError):
        graph.elementwise("cube", a)  # type: ignore[arg-type]


def test_add_requires_matching_shapes() -> None:
    graph = ComputeGraph()
    with pytest.raises(ShapeError):
        graph.add(Tensor(np.ones((1, 2))), Tensor(np.ones((2, 1))))


def test_embedding_lookup_scatter_adds_repeated_ids() -> None:
    graph = ComputeGraph()
    table = _leaf(np.arange(12.0).reshape(4, 3))
    rows = graph.embedding_lookup(table, [2, 0, 2])
    assert rows.data[0].tolist() == [6.0, 7.0, 8.0]
    graph.backward(graph.sum(rows))
    assert table.grad[:, 0].tolist() == [1.0, 0.0, 2.0, 0.0]


def test_embedding_lookup_rejects_out_of_range() -> None:
    graph = ComputeGraph()
    table = Tensor(np.zeros((3, 2)))
    with pytest.raises(EmbeddingIndexError):
        graph.embedding_lookup(table, [3])
    with pytest.raises(EmbeddingIndexError):
        graph.embedding_lookup(table, [-1])


def test_weighted_rowsum_needs_normalized_weights() -> None:
    graph = ComputeGraph()
    a = Tensor([[1.0, 2.0], [3.0, 4.0]])
    assert graph.weighted_rowsum(a, [0.25, 0.75]).data.tolist() == [[2.5, 3.5]]
    with pytest.raises(ArgumentError):
        graph.weighted_rowsum(a, [0.5, 0.6])
    with pytest.raises(ShapeError):
        graph.weighted_rowsum(a, [1.0])


def test_mean_and_sum_reductions() -> None:
    graph = ComputeGraph()
    a = Tensor([[1.0, 2.0], [3.0, 6.0]])
    assert graph.reduce("mean", a).data.tolist() == [[2.0, 4.0]]
    assert graph.reduce("sum", a).item() == 12.0


def test_concat_requires_single_rows() -> None:
    graph = ComputeGraph()
    with pytest.raises(ShapeError):
        graph.concat_cols([Tensor(np.ones((2, 1))), Tensor(np.ones((1, 1)))])
    with pytest.raises(ArgumentError):
        graph.concat_cols([])


def test_backward_accumulates_instead_of_overwriting() -> None:
    x = _leaf([[1.5, -2.0]])
    for _ in range(2):
        graph = ComputeGraph()
        graph.backward(graph.sum(graph.scale(x, 3.0)))
    assert x.grad.tolist() == [[6.0, 6.0]]


def test_shared_subexpression_gets_both_paths() -> None:
    graph = ComputeGraph()
    x = _leaf([[2.0]])
    y = graph.hadamard(x, x)
    graph.backward(graph.add(y, x))
    assert x.grad.tolist() == [[5.0]]


def test_frozen_leaves_receive_no_gradient() -> None:
    graph = ComputeGraph()
    frozen = Tensor([[1.0, 2.0]])
    trainable = _leaf([[3.0, 4.0]])
    graph.backward(graph.sum(graph.hadamard(frozen, trainable)))
    assert frozen.grad is None
    assert trainable.grad.tolist() == [[1.0, 2.0]]


def test_backward_requires_scalar_last_node() -> None:
    graph = ComputeGraph()
    x = _leaf([[1.0, 2.0]])
    y = graph.scale(x, 2.0)
    with pytest.raises(ArgumentError):
        graph.backward(y)
    loss = graph.sum(y)
    graph.relu(x)
    with pytest.raises(ArgumentError):
        graph.backward(loss)


def test_grad_of_exposes_intermediate_gradients() -> None:
    graph = ComputeGraph()
    x = _leaf([[1.0, 2.0]])
    mid = graph.scale(x, 2.0)
    graph.backward(graph.sum(graph.hadamard(mid, Tensor([[3.0, 5.0]]))))
    assert graph.grad_of(mid).tolist() == [[3.0, 5.0]]
    assert graph.grad_of(x).tolist() == [[6.0, 10.0]]


def test_reset_clears_the_tape() -> None:
    graph = ComputeGraph()
    graph.sum(Tensor([[1.0]]))
    assert len(graph) == 1
    graph.reset()
    assert len(graph) == 0


def test_grad_check_on_composite_function() -> None:
    rng = np.random.default_rng(0)
    w = _leaf(rng.uniform(-1.0, 1.0, (3, 2)))
    x = Tensor(rng.uniform(-1.0, 1.0, (4, 3)))

    def loss(graph: ComputeGraph) -> Tensor:
        h = graph.sigmoid(graph.matmul(x, w))
        return graph.sum(graph.hadamard(h, h))

    assert grad_check(loss, w) < 1e-6
    assert w.grad is None
    assert w.requires_grad


def test_grad_check_rejects_non_scalar_and_bad_eps() -> None:
    x = _leaf([[1.0, 2.0]])
    with pytest.raises(ArgumentError):
        grad_check(lambda graph: graph.scale(x, 1.0), x)
    with pytest.raises(ArgumentError):
        grad_check(lambda graph: graph.sum(x), x, eps=0.0)


def test_grad_check_floor_covers_roundoff_on_tiny_gradients() -> None:
    x = _leaf([[0.3, -0.7]])
    offset = Tensor([[1.0]])

    def loss(graph: ComputeGraph) -> Tensor:
        return graph.add(graph.scale(graph.sum(x), 1e-9), offset)

    assert grad_check(loss, x, floor=1e-5) < 1e-4
    with pytest.raises(ArgumentError):
        grad_check(loss, x, floor=0.0)


def test_grad_check_detects_a_wrong_backward_rule() -> None:
    x = _leaf([[0.3, -0.7]])

    def broken(graph: ComputeGraph) -> Tensor:
        def backward(g: np.ndarray, sink) -> None:
            sink.add(x, g * 2.0 * x.data)  # true derivative is 3x^2

        cube = graph.record("cube", (x,), x.data**3, backward)
        return graph.sum(cube)

    assert grad_check(broken, x) > 0.1


def test_log_two_is_the_bce_of_a_coin_flip() -> None:
    assert -math.log(sigmoid_values(np.array([0.0]))[0]) == pytest.approx(math.log(2.0), abs=1e-12)
