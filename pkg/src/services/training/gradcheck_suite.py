"""Finite-difference checks of every differentiable op and of whole models."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from src.lib.errors import UsageError
from src.services.autograd.gradcheck import grad_check
from src.services.autograd.graph import ComputeGraph
from src.services.autograd.tensor import Tensor
from src.services.data.context import UserContext
from src.services.data.dataset import Sample
from src.services.data.vocab import ModelVocabulary, Vocabulary
from src.services.model.base import Recommender
from src.services.model.config import ModelConfig
from src.services.model.dacdr import DacdrModel
from src.services.training.losses import bce_with_logits, squared_error

logger = logging.getLogger(__name__)

OP_THRESHOLD = 1e-6
E2E_THRESHOLD = 1e-4
E2E_FLOOR = 1e-5
INPUT_RANGE = 2.0


@dataclass(slots=True)
class CheckResult:
    name: str
    kind: str
    max_rel_error: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.threshold

    def as_record(self) -> dict[str, object]:
        return {
            "check": self.name,
            "kind": self.kind,
            "max_rel_error": self.max_rel_error,
            "threshold": self.threshold,
            "passed": self.passed,
        }

    def as_row(self) -> dict[str, object]:
        return {
            "check": self.name,
            "kind": self.kind,
            "max_rel_error": f"{self.max_rel_error:.3e}",
            "threshold": f"{self.threshold:.0e}",
            "passed": self.passed,
        }


OpCheck = Callable[[np.random.Generator], tuple[Callable[[ComputeGraph], Tensor], list[Tensor]]]


def _leaf(rng: np.random.Generator, rows: int, cols: int) -> Tensor:
    return Tensor(rng.uniform(-INPUT_RANGE, INPUT_RANGE, (rows, cols)), requires_grad=True)


def _probe(rng: np.random.Generator, rows: int, cols: int) -> Tensor:
    return Tensor(rng.uniform(-1.0, 1.0, (rows, cols)))


def _weighted(graph: ComputeGraph, out: Tensor, probe: Tensor) -> Tensor:
    """Random projection to a scalar, so no output direction is left untested."""
    return graph.sum(graph.hadamard(out, probe))


def _unary(op: str, rows: int = 3, cols: int = 4) -> OpCheck:
    def build(rng: np.random.Generator):
        x = _leaf(rng, rows, cols)
        if op == "relu":
            # keep the central difference off the kink
            x.data[np.abs(x.data) < 0.1] += 0.2
        if op == "transpose":
            probe = _probe(rng, cols, rows)
        elif op == "reshape":
            probe = _probe(rng, cols, rows)
        elif op == "mean":
            probe = _probe(rng, 1, cols)
        else:
            probe = _probe(rng, rows, cols)

        def fn(graph: ComputeGraph) -> Tensor:
            if op == "transpose":
                out = graph.transpose(x)
            elif op == "reshape":
                out = graph.reshape(x, cols, rows)
            elif op == "softmax":
                out = graph.softmax_rows(x)
            elif op == "scale":
                out = graph.scale(x, -1.7)
            elif op == "relu":
                out = graph.relu(x)
            elif op == "sigmoid":
                out = graph.sigmoid(x)
            elif op == "mean":
                out = graph.mean(x)
            else:
                raise UsageError(f"no unary check for '{op}'")
            return _weighted(graph, out, probe)

        return fn, [x]

    return build


def _binary(op: str) -> OpCheck:
    def build(rng: np.random.Generator):
        a, b = _leaf(rng, 3, 4), _leaf(rng, 3, 4)
        probe = _probe(rng, 3, 4)

        def fn(graph: ComputeGraph) -> Tensor:
            return _weighted(graph, graph.elementwise(op, a, b), probe)

        return fn, [a, b]

    return build


def _matmul(rng: np.random.Generator):
    a, b = _leaf(rng, 3, 4), _leaf(rng, 4, 2)
    probe = _probe(rng, 3, 2)
    return (lambda graph: _weighted(graph, graph.matmul(a, b), probe)), [a, b]


def _concat(rng: np.random.Generator):
    parts = [_leaf(rng, 1, 2), _leaf(rng, 1, 3), _leaf(rng, 1, 1)]
    probe = _probe(rng, 1, 6)
    return (lambda graph: _weighted(graph, graph.concat_cols(parts), probe)), parts


def _embedding(rng: np.random.Generator):
    table = _leaf(rng, 5, 3)
    probe = _probe(rng, 4, 3)
    return (lambda graph: _weighted(graph, graph.embedding_lookup(table, [0, 3, 3, 1]), probe)), [table]


def _scale_rows(rng: np.random.Generator):
    a, w = _leaf(rng, 4, 3), _leaf(rng, 1, 4)
    probe = _probe(rng, 4, 3)
    return (lambda graph: _weighted(graph, graph.scale_rows(a, w), probe)), [a, w]


def _sum(rng: np.random.Generator):
    x = _leaf(rng, 2, 3)
    return (lambda graph: graph.sum(graph.hadamard(x, x))), [x]


def _weighted_rowsum(rng: np.random.Generator):
    a, logits = _leaf(rng, 4, 3), _leaf(rng, 1, 4)
    probe = _probe(rng, 1, 3)

    def fn(graph: ComputeGraph) -> Tensor:
        weights = graph.softmax_rows(logits)
        return _weighted(graph, graph.weighted_rowsum(a, weights), probe)

    return fn, [a, logits]


def _bce(rng: np.random.Generator):
    z = _leaf(rng, 1, 1)
    return (lambda graph: bce_with_logits(graph, z, 1.0)), [z]


def _mse(rng: np.random.Generator):
    z = _leaf(rng, 1, 1)
    return (lambda graph: squared_error(graph, z, 3.5)), [z]


OP_CHECKS: dict[str, OpCheck] = {
    "matmul": _matmul,
    "transpose": _unary("transpose"),
    "reshape": _unary("reshape"),
    "softmax": _unary("softmax"),
    "add": _binary("add"),
    "sub": _binary("sub"),
    "hadamard": _binary("hadamard"),
    "scale": _unary("scale"),
    "relu": _unary("relu"),
    "sigmoid": _unary("sigmoid"),
    "concat": _concat,
    "embedding": _embedding,
    "scale_rows": _scale_rows,
    "sum": _sum,
    "mean": _unary("mean"),
    "weighted_rowsum": _weighted_rowsum,
    "bce": _bce,
    "mse": _mse,
}


def tiny_fixture(seed: int = 0) -> tuple[ModelVocabulary, list[Sample]]:
    """A handful of users, items and categories with short histories."""
    rng = np.random.default_rng(seed)
    src_items = [f"s{i}" for i in range(6)]
    categories = ["c0", "c1", "c2"]
    vocab = ModelVocabulary(
        users=Vocabulary(f"u{i}" for i in range(4)),
        items_src=Vocabulary(src_items, pad=True),
        items_tgt=Vocabulary(f"t{i}" for i in range(4)),
        categories=Vocabulary(categories, pad=True),
        domains=Vocabulary(["target"]),
    )
    samples: list[Sample] = []
    for index in range(6):
        length = int(rng.integers(1, 5))
        behavior = tuple(str(item) for item in rng.choice(src_items, size=length))
        side = tuple(categories[int(item[1:]) % len(categories)] for item in behavior)
        user = f"u{index % 4}"
        samples.append(
            Sample(
                user_id=user,
                item_id=f"t{int(rng.integers(0, 4))}",
                domain_id="target",
                label=float(index % 2),
                timestamp=100 + index,
                context=UserContext(user, behavior, side, 100 + index),
            )
        )
    return vocab, samples


def tiny_config(**overrides: object) -> ModelConfig:
    values: dict[str, object] = {
        "embed_dim": 4,
        "attn_dim": 4,
        "max_seq_len": 8,
        "encoder_hidden": (8,),
        "head_hidden": (8,),
    }
    values.update(overrides)
    return ModelConfig(**values)


def model_grad_check(model: Recommender, sample: Sample, eps: float = 1e-5) -> float:
    """grad_check over every parameter group of `model` through one sample loss.

    Attention gradients at init sit near 1e-9, below the roundoff of central
    differences, which grows with the loss value. Entries under
    `E2E_FLOOR * max(1, |loss|)` are therefore compared on an absolute scale.
    """
    tensors = [tensor for _, tensor in model.params.items()]
    loss = abs(model.sample_loss(ComputeGraph(), sample).item())
    floor = E2E_FLOOR * max(1.0, loss)
    return grad_check(lambda graph: model.sample_loss(graph, sample), tensors, eps, floor=floor)


def e2e_check(config: ModelConfig, seed: int = 0, eps: float = 1e-5) -> float:
    """Check the composed forward pass and loss at the model's own initialisation."""
    vocab, samples = tiny_fixture(seed)
    model = DacdrModel.initialize("dacdr", config, vocab, seed=seed)
    sample = samples[0]
    if config.output_mode == "rating":
        sample = Sample(
            sample.user_id, sample.item_id, sample.domain_id, 4.0, sample.timestamp, sample.context
        )
    return model_grad_check(model, sample, eps)


E2E_CHECKS: dict[str, ModelConfig] = {
    "e2e_dacdr_bce": tiny_config(),
    "e2e_dacdr_mse": tiny_config(output_mode="rating"),
    "e2e_meta_bridge": tiny_config(user_transfer="meta_bridge"),
}


def run_suite(
    op: str | None = None, *, e2e_only: bool = False, seed: int = 0, eps: float = 1e-5
) -> list[CheckResult]:
    if op is not None and op not in OP_CHECKS and op not in E2E_CHECKS:
        raise UsageError(
            f"Unknown op '{op}' (expected one of {', '.join([*OP_CHECKS, *E2E_CHECKS])})"
        )
    if e2e_only and op is not None and op not in E2E_CHECKS:
        raise UsageError(
            f"'{op}' is not an end-to-end check (expected one of {', '.join(E2E_CHECKS)})"
        )
    results: list[CheckResult] = []
    if not e2e_only:
        for name, build in OP_CHECKS.items():
            if op is not None and name != op:
                continue
            fn, inputs = build(np.random.default_rng(seed))
            results.append(CheckResult(name, "op", grad_check(fn, inputs, eps), OP_THRESHOLD))
    for name, config in E2E_CHECKS.items():
        if op is not None and name != op:
            continue
        results.append(CheckResult(name, "e2e", e2e_check(config, seed, eps), E2E_THRESHOLD))
    for result in results:
        logger.debug("gradcheck %s: %.3e", result.name, result.max_rel_error)
    return results


__all__ = [
    "CheckResult",
    "E2E_CHECKS",
    "E2E_FLOOR",
    "E2E_THRESHOLD",
    "OP_CHECKS",
    "OP_THRESHOLD",
    "e2e_check",
    "model_grad_check",
    "run_suite",
    "tiny_config",
    "tiny_fixture",
]
