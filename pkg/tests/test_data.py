"""Ingestion, vocabularies, causal contexts, the cold-start split and synthesis."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from src.lib.errors import DataError, IngestionError, ProtocolError
from src.lib.models import InteractionRecord, label_for
from src.services.data import (
    CrossDomainDataset,
    HistoryIndex,
    Vocabulary,
    build_context,
    cold_start_split,
    load_interactions,
    load_side_info,
)
from src.services.data.split import STANDARD_BETAS, assert_no_leakage, round_half_up
from src.services.data.synth import SynthSpec, rotation_matrix, synth_generate
from src.services.data.vocab import PAD_TOKEN
from src.services.evaluation.metrics import auc

HEADER = "user_id\titem_id\tdomain_id\tsignal\ttimestamp\n"


def _write(path: Path, body: str, header: str = HEADER) -> Path:
    path.write_text(header + body, encoding="utf-8")
    return path


def _record(user: str, item: str, domain: str, ts: int, signal: float = 1.0) -> InteractionRecord:
    return InteractionRecord(user_id=user, item_id=item, domain_id=domain, signal=signal, timestamp=ts)


# -- vocabularies -------------------------------------------------------------


def test_vocabulary_is_dense_in_first_seen_order() -> None:
    vocab = Vocabulary(["b", "a", "b", "c"])
    assert vocab.tokens == ["b", "a", "c"]
    assert vocab.index("c") == 2
    assert Vocabulary.from_dict(vocab.to_dict()) == vocab


def test_pad_vocabulary_reserves_row_zero() -> None:
    vocab = Vocabulary(["x"], pad=True)
    assert vocab.index(PAD_TOKEN) == 0
    assert vocab.lookup_or_pad("x") == 1
    assert vocab.lookup_or_pad("unseen") == 0
    restored = Vocabulary.from_dict(vocab.to_dict())
    assert restored.tokens == [PAD_TOKEN, "x"]


# -- ingestion ----------------------------------------------------------------


def test_load_interactions_parses_valid_rows(tmp_path: Path) -> None:
    path = _write(tmp_path / "i.tsv", "u1\ts1\tsource\t1\t10\nu1\tt1\ttarget\t0\t20\n")
    loaded = load_interactions(path, "logit", ("source", "target"))
    assert [r.item_id for r in loaded.records] == ["s1", "t1"]
    assert loaded.records[1].signal == 0.0
    assert loaded.malformed == 0


def test_malformed_rows_over_threshold_abort_with_samples(tmp_path: Path) -> None:
    path = _write(tmp_path / "i.tsv", "u1\ts1\tsource\t1\t10\nu1\tt1\ttarget\t0.5\t20\n")
    with pytest.raises(IngestionError) as excinfo:
        load_interactions(path, "logit", ("source", "target"))
    assert "line 3" in str(excinfo.value)
    loaded = load_interactions(path, "logit", ("source", "target"), max_malformed_frac=0.5)
    assert len(loaded.records) == 1
    assert loaded.malformed == 1


def test_rating_schema_bounds(tmp_path: Path) -> None:
    path = _write(tmp_path / "i.tsv", "u1\ts1\tsource\t5\t10\nu1\tt1\ttarget\t6\t20\n")
    loaded = load_interactions(path, "rating", ("source", "target"), max_malformed_frac=0.5)
    assert [r.signal for r in loaded.records] == [5.0]


def test_short_row_counts_as_malformed(tmp_path: Path) -> None:
    body = "".join(f"u{i}\ts{i}\tsource\t1\t{i}\n" for i in range(200)) + "u9\ti9\n"
    path = _write(tmp_path / "i.tsv", body)
    loaded = load_interactions(path, "logit", ("source", "target"))
    assert len(loaded.records) == 200
    assert loaded.malformed == 1
    assert loaded.total_rows == 201

    only_short = _write(tmp_path / "short.tsv", "u9\ti9\n")
    with pytest.raises(IngestionError, match="malformed") as excinfo:
        load_interactions(only_short, "logit", ("source", "target"))
    assert "missing fields" in str(excinfo.value)


def test_unknown_domain_always_aborts(tmp_path: Path) -> None:
    path = _write(tmp_path / "i.tsv", "u1\ts1\tmusic\t1\t10\n")
    with pytest.raises(IngestionError, match="unknown domain_id 'music'"):
        load_interactions(path, "logit", ("source", "target"), max_malformed_frac=1.0)


def test_bad_header_and_missing_file(tmp_path: Path) -> None:
    path = _write(tmp_path / "i.tsv", "u1\ts1\tsource\t1\t10\n", header="user\titem\n")
    with pytest.raises(IngestionError, match="expected header"):
        load_interactions(path, "logit", ("source",))
    with pytest.raises(IngestionError, match="File not found"):
        load_interactions(tmp_path / "missing.tsv", "logit", ("source",))


def test_empty_file_yields_no_records(tmp_path: Path) -> None:
    path = tmp_path / "i.tsv"
    path.write_text("", encoding="utf-8")
    assert load_interactions(path, "logit", ("source",)).records == []


def test_side_info_first_category_wins(tmp_path: Path) -> None:
    path = tmp_path / "side.tsv"
    path.write_text("item_id\tcategory_id\ns1\tc1\ns1\tc2\ns2\tc3\n", encoding="utf-8")
    assert load_side_info(path) == {"s1": "c1", "s2": "c3"}


def test_data_error_is_exit_code_three() -> None:
    assert IngestionError("x").exit_code == 3
    assert ProtocolError("x").exit_code == 3


# -- labels ---------------------------------------------------------------------


def test_rating_binarizes_for_logit_models() -> None:
    assert label_for(4.0, "rating", "logit") == 1.0
    assert label_for(3.0, "rating", "logit") == 0.0
    assert label_for(3.0, "rating", "rating") == 3.0
    assert label_for(1.0, "logit", "logit") == 1.0


# -- contexts -------------------------------------------------------------------


def _history() -> list[InteractionRecord]:
    return [
        _record("u1", "s3", "source", 30),
        _record("u1", "s1", "source", 10),
        _record("u1", "s2", "source", 20),
        _record("u1", "t1", "target", 25),
        _record("u2", "s9", "source", 5),
    ]


def test_causal_context_is_strictly_before_cutoff() -> None:
    ctx = build_context("u1", _history(), cutoff_ts=30)
    assert ctx.behavior_seq == ("s1", "s2")
    assert ctx.cutoff_ts == 30


def test_context_keeps_the_last_items() -> None:
    ctx = build_context("u1", _history(), cutoff_ts=None, max_len=2)
    assert ctx.behavior_seq == ("s2", "s3")


def test_non_causal_context_ignores_the_cutoff() -> None:
    ctx = build_context("u1", _history(), cutoff_ts=5, causal=False)
    assert ctx.behavior_seq == ("s1", "s2", "s3")
    assert ctx.cutoff_ts is None


def test_empty_history_collapses_to_padding() -> None:
    ctx = build_context("u1", _history(), cutoff_ts=10)
    assert ctx.is_padding
    assert ctx.side_seq == (PAD_TOKEN,)
    assert len(ctx) == 1


def test_side_channel_is_aligned_with_behaviour() -> None:
    ctx = build_context("u1", _history(), cutoff_ts=None, categories={"s1": "c1", "s3": "c3"})
    assert ctx.side_seq == ("c1", PAD_TOKEN, "c3")


def test_history_index_matches_the_reference_builder() -> None:
    rng = np.random.default_rng(0)
    records = [
        _record(f"u{int(rng.integers(0, 5))}", f"s{int(rng.integers(0, 9))}", "source", int(rng.integers(0, 100)))
        for _ in range(120)
    ]
    index = HistoryIndex(records, source_domain="source")
    for _ in range(200):
        user = f"u{int(rng.integers(0, 6))}"
        cutoff = int(rng.integers(0, 110))
        max_len = int(rng.integers(1, 8))
        expected = build_context(user, records, cutoff, max_len)
        assert index.context(user, cutoff, max_len) == expected
        assert index.context(user, cutoff, max_len) is index.context(user, cutoff, max_len)


# -- split ----------------------------------------------------------------------


def _random_records(rng: np.random.Generator, users: int) -> list[InteractionRecord]:
    records: list[InteractionRecord] = []
    for u in range(users):
        role = rng.integers(0, 3)
        if role in (0, 2):
            records.append(_record(f"u{u}", "s1", "source", int(rng.integers(0, 50))))
        if role in (1, 2):
            records.append(_record(f"u{u}", "t1", "target", int(rng.integers(0, 50))))
    records.append(_record("anchor", "s1", "source", 0))
    records.append(_record("anchor", "t1", "target", 1))
    return records


def test_split_partitions_overlap_users_over_random_datasets() -> None:
    rng = np.random.default_rng(11)
    for trial in range(100):
        records = _random_records(rng, int(rng.integers(1, 40)))
        overlap = {r.user_id for r in records if r.domain_id == "source"} & {
            r.user_id for r in records if r.domain_id == "target"
        }
        for beta in STANDARD_BETAS:
            split = cold_start_split(records, beta, seed=trial)
            assert split.test_users | split.train_users == overlap
            assert not split.test_users & split.train_users
            assert len(split.test_users) == round_half_up(beta * len(overlap))
            train, test = split.partition(records, ("target",))
            assert not {r.user_id for r in train} & split.test_users
            assert {r.user_id for r in test} <= split.test_users


def test_split_rounds_half_up_and_is_seeded() -> None:
    records = []
    for u in range(5):
        records += [_record(f"u{u}", "s1", "source", 1), _record(f"u{u}", "t1", "target", 2)]
    split = cold_start_split(records, 0.5, seed=7)
    assert len(split.test_users) == 3
    assert cold_start_split(records, 0.5, seed=7) == split
    assert split.describe() == {"beta": 0.5, "seed": 7, "test_users": 3, "train_users": 2}


def test_split_protocol_errors() -> None:
    records = [_record("u1", "s1", "source", 1), _record("u2", "t1", "target", 2)]
    with pytest.raises(ProtocolError, match="No overlapping users"):
        cold_start_split(records, 0.2, seed=0)
    with pytest.raises(ProtocolError):
        cold_start_split(records, 1.0, seed=0)


def test_leakage_check_names_the_users() -> None:
    records = []
    for u in range(4):
        records += [_record(f"u{u}", "s1", "source", 1), _record(f"u{u}", "t1", "target", 2)]
    split = cold_start_split(records, 0.5, seed=0)
    leaked = sorted(split.test_users)[0]
    with pytest.raises(ProtocolError, match=leaked):
        assert_no_leakage(split, [leaked])
    assert_no_leakage(split, split.train_users)


# -- dataset ----------------------------------------------------------------------


def test_dataset_rejects_source_as_target() -> None:
    with pytest.raises(DataError):
        CrossDomainDataset([], source_domain="a", target_domains=("a",))


def test_dataset_samples_are_causal_and_leak_free(synth_dataset: CrossDomainDataset) -> None:
    split = cold_start_split(synth_dataset.records, 0.2, seed=1)
    train = synth_dataset.target_samples(split, "train", "logit", max_len=5)
    test = synth_dataset.target_samples(split, "test", "logit", max_len=5)
    assert train and test
    assert not {s.user_id for s in train} & split.test_users
    assert {s.user_id for s in test} <= split.test_users

    times = {(r.user_id, r.item_id): r.timestamp for r in synth_dataset.source_records}
    for sample in train + test:
        assert sample.context.cutoff_ts == sample.timestamp
        assert len(sample.context) <= 5
        if not sample.context.is_padding:
            assert all(times[(sample.user_id, item)] < sample.timestamp for item in sample.context.behavior_seq)


def test_dataset_vocabulary(synth_dataset: CrossDomainDataset) -> None:
    vocab = synth_dataset.vocabulary()
    assert vocab.items_src.tokens[0] == PAD_TOKEN
    assert vocab.categories.tokens[0] == PAD_TOKEN
    assert vocab.domains.tokens == ["target"]
    assert len(vocab.items_tgt) == len({r.item_id for r in synth_dataset.target_records})


def test_dataset_round_trips_through_files(tmp_path: Path) -> None:
    spec = SynthSpec(n_users=20, n_items_src=10, n_items_tgt=8, seed=2, src_events_per_user=3, tgt_events_per_user=2)
    result = synth_generate(spec, tmp_path / "toy")
    dataset = CrossDomainDataset.from_files(result.interactions_path, result.side_info_path)
    assert dataset.name == "toy"
    assert dataset.records == result.records
    assert dataset.describe()["records"] == len(result.records)


# -- synthesis ----------------------------------------------------------------------


def test_rotation_matrix_is_orthogonal() -> None:
    rotation = rotation_matrix(5, 60.0)
    assert np.allclose(rotation @ rotation.T, np.eye(5))
    assert np.array_equal(rotation_matrix(4, 0.0), np.eye(4))
    assert rotation[4, 4] == 1.0


def test_synth_is_byte_identical_for_a_seed(tmp_path: Path) -> None:
    spec = SynthSpec(n_users=30, n_items_src=12, n_items_tgt=9, seed=1, src_events_per_user=4, tgt_events_per_user=3)
    first = synth_generate(spec, tmp_path / "a")
    second = synth_generate(spec, tmp_path / "b")
    for name in ("interactions.tsv", "side_info.tsv", "synth_spec.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert first.stats == second.stats


def test_synth_overlap_and_schema() -> None:
    spec = SynthSpec(n_users=40, overlap_frac=0.5, seed=4, schema="rating", src_events_per_user=3, tgt_events_per_user=3)
    result = synth_generate(spec)
    source = {r.user_id for r in result.records if r.domain_id == "source"}
    target = {r.user_id for r in result.records if r.domain_id == "target"}
    assert len(source & target) == 20
    assert {r.signal for r in result.records} <= {1.0, 2.0, 3.0, 4.0, 5.0}
    assert result.expected_positive_rate is None


def test_synth_logit_reports_expected_positive_rate() -> None:
    result = synth_generate(SynthSpec(n_users=30, seed=0, src_events_per_user=3, tgt_events_per_user=3))
    assert 0.0 < result.expected_positive_rate < 1.0
    assert {r.signal for r in result.records} <= {0.0, 1.0}


def test_low_noise_logit_labels_are_nearly_separable() -> None:
    spec = SynthSpec(n_users=400, noise=0.05, seed=0)
    sharp = synth_generate(spec)
    labels = [r.signal for r in sharp.records]
    assert len(sharp.label_probabilities) == len(labels)
    assert spec.effective_signal_scale == 10.0
    assert auc(sharp.label_probabilities, labels) >= 0.97

    soft = synth_generate(spec.model_copy(update={"signal_scale": 3.0}))
    assert auc(soft.label_probabilities, [r.signal for r in soft.records]) < 0.95
    assert SynthSpec(schema="rating").effective_signal_scale == 3.0


def test_synth_spec_rejects_zero_overlap() -> None:
    with pytest.raises(ValidationError):
        SynthSpec(overlap_frac=0.0)
