"""AUC/MAE/RMSE, the evaluator, sweeps and report rendering."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.lib.errors import ConfigError, MetricError
from src.services.data.dataset import CrossDomainDataset
from src.services.data.split import cold_start_split
from src.services.data.synth import SynthSpec, synth_generate
from src.services.evaluation.evaluator import EvalReport, compute_metrics, evaluate, score_samples
from src.services.evaluation.experiments import run_ablation_sweep, run_beta_sweep
from src.services.evaluation.metrics import auc, mae_rmse
from src.services.evaluation.reports import dumps_report, report_table, write_report
from src.services.model.config import ModelConfig
from src.services.model.dacdr import DacdrModel
from src.services.training.config import TrainConfig
from src.services.training.gradcheck_suite import tiny_config
from src.services.training.pipeline import fit_variant


def _pairwise_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = 0.0
    for p in pos:
        for n in neg:
            wins += 1.0 if p > n else 0.5 if p == n else 0.0
    return wins / (len(pos) * len(neg))


def test_auc_matches_the_pairwise_definition() -> None:
    rng = np.random.default_rng(0)
    for _ in range(500):
        n = int(rng.integers(2, 101))
        labels = rng.integers(0, 2, size=n)
        labels[0], labels[1] = 0, 1
        # coarse scores so ties occur often
        scores = rng.integers(0, 5, size=n).astype(float) / 4.0
        assert auc(scores, labels) == pytest.approx(_pairwise_auc(scores, labels), abs=1e-12)


def test_auc_edges() -> None:
    assert auc([0.1, 0.9], [0, 1]) == 1.0
    assert auc([0.9, 0.1], [0, 1]) == 0.0
    assert auc([0.5, 0.5, 0.5], [0, 1, 1]) == 0.5
    assert auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == pytest.approx(0.75, abs=1e-12)


def test_auc_ignores_monotone_transforms_and_flips_on_complement() -> None:
    rng = np.random.default_rng(1)
    scores = rng.normal(size=50)
    labels = rng.integers(0, 2, size=50)
    labels[:2] = (0, 1)
    base = auc(scores, labels)
    assert auc(np.exp(scores) * 3.0 + 1.0, labels) == pytest.approx(base, abs=1e-12)
    assert auc(scores, 1 - labels) == pytest.approx(1.0 - base, abs=1e-12)


def test_auc_rejects_bad_input() -> None:
    with pytest.raises(MetricError, match="single-class"):
        auc([0.1, 0.2], [1, 1])
    with pytest.raises(MetricError):
        auc([0.1], [0, 1])
    with pytest.raises(MetricError):
        auc([0.1, 0.2], [0, 2])


def test_mae_rmse() -> None:
    mae, rmse = mae_rmse([1.0, 2.0, 4.0], [1.0, 1.0, 1.0])
    assert mae == pytest.approx(4.0 / 3.0)
    assert rmse == pytest.approx(math.sqrt(10.0 / 3.0))
    assert rmse >= mae
    with pytest.raises(MetricError):
        mae_rmse([], [])
    with pytest.raises(MetricError):
        mae_rmse([1.0], [1.0, 2.0])


def test_rating_metrics_clamp_predictions() -> None:
    metrics = compute_metrics("rating", [7.0, -2.0], [5.0, 1.0])
    assert metrics == {"mae": 0.0, "rmse": 0.0}


def test_eval_report_validates_metric_ranges() -> None:
    EvalReport(dataset="d", variant="v", metrics={"auc": 1.0})
    with pytest.raises(ValidationError):
        EvalReport(dataset="d", variant="v", metrics={"auc": 1.2})
    with pytest.raises(ValidationError):
        EvalReport(dataset="d", variant="v", mode="rating", metrics={"mae": 0.5, "rmse": 0.4})
    with pytest.raises(ValidationError):
        EvalReport(dataset="d", variant="v", mode="rating", metrics={"mae": -0.1, "rmse": 0.4})


SMALL = ModelConfig(embed_dim=4, attn_dim=4, max_seq_len=5, encoder_hidden=(8,), head_hidden=(8,))
QUICK = TrainConfig(lr=0.01, batch_size=32, epochs=1)


def test_evaluate_is_deterministic_across_worker_counts(synth_dataset) -> None:
    split = cold_start_split(synth_dataset.records, 0.2, seed=0)
    model = fit_variant("dacdr", synth_dataset, split, SMALL, QUICK).model
    serial = evaluate(model, synth_dataset, split, workers=1)
    again = evaluate(model, synth_dataset, split, workers=1)
    threaded = evaluate(model, synth_dataset, split, workers=4)
    assert serial == again
    assert serial.metrics == threaded.metrics
    assert serial.samples == len(synth_dataset.target_samples(split, "test", "logit", max_len=5))
    assert serial.split["beta"] == 0.2
    assert serial.dataset == "synth"


def test_score_samples_keeps_order(tiny) -> None:
    vocab, samples = tiny
    model = DacdrModel.initialize("dacdr", tiny_config(), vocab, seed=0)
    assert score_samples(model, samples, 3) == [model.predict(s) for s in samples]


def test_untrained_model_ranks_at_chance() -> None:
    spec = SynthSpec(
        n_users=2500,
        n_items_src=60,
        n_items_tgt=40,
        noise=0.05,
        seed=11,
        src_events_per_user=6,
        tgt_events_per_user=5,
    )
    generated = synth_generate(spec)
    dataset = CrossDomainDataset(generated.records, generated.side_info, name="null")
    split = cold_start_split(dataset.records, 0.5, seed=0)
    samples = [
        sample
        for part in ("train", "test")
        for sample in dataset.target_samples(split, part, "logit", max_len=8)
    ]
    labels = [sample.label for sample in samples]
    assert len(samples) >= 10_000
    assert 0.4 < float(np.mean(labels)) < 0.6
    model = DacdrModel.initialize("dacdr", tiny_config(), dataset.vocabulary(), seed=0)
    assert 0.45 <= auc(score_samples(model, samples, 4), labels) <= 0.55


def test_evaluate_refuses_a_mode_mismatch(synth_dataset) -> None:
    split = cold_start_split(synth_dataset.records, 0.2, seed=0)
    model = fit_variant("dnn_single", synth_dataset, split, SMALL, QUICK).model
    with pytest.raises(ConfigError):
        evaluate(model, synth_dataset, split, "rating")


def test_ablation_sweep_has_four_rows(synth_dataset) -> None:
    split = cold_start_split(synth_dataset.records, 0.2, seed=0)
    report = run_ablation_sweep(synth_dataset, split, SMALL, QUICK)
    assert [row["ablation"] for row in report.rows] == ["full", "no_da", "no_ia", "no_da_ia"]
    assert all(0.0 <= row["auc"] <= 1.0 for row in report.rows)
    table = report_table(report)
    assert table.splitlines()[0].split()[:2] == ["variant", "ablation"]
    assert len(table.splitlines()) == 6


def test_beta_sweep_trains_one_model_per_beta(synth_dataset) -> None:
    reports = run_beta_sweep((0.2, 0.5), "dnn_single", synth_dataset, 0, SMALL, QUICK)
    assert [r.split["beta"] for r in reports] == [0.2, 0.5]
    assert reports[0].samples < reports[1].samples
    assert all(r.config["split"]["beta"] == r.split["beta"] for r in reports)


def test_reports_are_stable_json(tmp_path) -> None:
    report = EvalReport(dataset="d", split={"beta": 0.2, "seed": 0}, variant="dacdr", metrics={"auc": 0.75}, samples=8)
    text = dumps_report(report)
    assert text == dumps_report(report)
    assert json.loads(text)["metrics"] == {"auc": 0.75}
    path = write_report(tmp_path / "nested" / "dacdr.eval.json", [report, report])
    assert len(json.loads(path.read_text(encoding="utf-8"))) == 2
    assert "0.750000" in report_table(report)
