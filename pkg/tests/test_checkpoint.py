"""Checkpoint text format and model restore."""

from __future__ import annotations

import numpy as np
import pytest

from src.lib.errors import UsageError
from src.services.model.checkpoint import CheckpointFormatError, read_checkpoint, write_checkpoint
from src.services.model.factory import build_model, load_model, save_model
from src.services.training.gradcheck_suite import tiny_config


@pytest.mark.parametrize("variant", ["dacdr", "no_ia", "dnn_multi", "emcdr_lite"])
def test_round_trip_is_bit_exact(tiny, tmp_path, variant: str) -> None:
    vocab, samples = tiny
    model = build_model(variant, tiny_config(), vocab, seed=7)
    path = save_model(model, tmp_path / f"{variant}.ckpt", extra={"split": {"beta": 0.2, "seed": 0}})
    restored, meta = load_model(path)
    assert meta["split"] == {"beta": 0.2, "seed": 0}
    assert restored.variant == variant
    assert restored.params.names == model.params.names
    for name, tensor in model.params.items():
        assert np.array_equal(tensor.data, restored.params[name].data)
    assert [restored.predict(s) for s in samples] == [model.predict(s) for s in samples]

    again = save_model(restored, tmp_path / "again.ckpt", extra={"split": {"beta": 0.2, "seed": 0}})
    assert again.read_bytes() == path.read_bytes()


def test_trainable_flags_survive(tiny, tmp_path) -> None:
    vocab, _ = tiny
    model = build_model("dacdr", tiny_config(), vocab)
    model.params.freeze(["side"])
    payload = read_checkpoint(write_checkpoint(tmp_path / "m.ckpt", {"variant": "dacdr"}, model.params))
    assert payload.params.trainable_mask == model.params.trainable_mask


def test_missing_and_malformed_files(tmp_path) -> None:
    with pytest.raises(UsageError, match="Checkpoint not found"):
        read_checkpoint(tmp_path / "absent.ckpt")
    bad = tmp_path / "bad.ckpt"
    bad.write_text("NOT-A-CHECKPOINT 1\n", encoding="utf-8")
    with pytest.raises(CheckpointFormatError):
        read_checkpoint(bad)


def test_truncated_file_is_rejected(tiny, tmp_path) -> None:
    vocab, _ = tiny
    path = save_model(build_model("dnn_single", tiny_config(), vocab), tmp_path / "m.ckpt")
    lines = path.read_text(encoding="utf-8").splitlines()
    path.write_text("\n".join(lines[:-3]) + "\n", encoding="utf-8")
    with pytest.raises(CheckpointFormatError):
        read_checkpoint(path)
