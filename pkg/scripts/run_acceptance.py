#!/usr/bin/env python3
"""Directional acceptance checks at desk scale.

Runs the slow checks that the unit suite only exercises at small scale:
learning sanity, the attention ablation ordering, cold-start MAE against the
bridge baseline, the fine-tuning contract and end-to-end CLI determinism.

Usage example:
  python scripts/run_acceptance.py --checks learning,ablation --seeds 5 \
    --out runs/acceptance.json --log logs/acceptance.log
"""

from __future__ import annotations

import argparse
import filecmp
import json
import logging
import os
import sys
import tempfile
import time
from pathlib import Path
from typing import Any, Callable

import numpy as np
from dotenv import load_dotenv

PROJECT_ROOT = Path(__file__).resolve().parents[1]
CHECKS = ("learning", "ablation", "cold_start", "finetune", "determinism")
LEARNING_BUDGET_S = 300.0


def _ensure_project_root() -> None:
    if str(PROJECT_ROOT) not in sys.path:
        sys.path.insert(0, str(PROJECT_ROOT))


def _build_logger(log_path: Path | None) -> logging.Logger:
    logger = logging.getLogger("acceptance")
    logger.setLevel(logging.DEBUG)
    logger.handlers.clear()
    fmt = logging.Formatter(
        fmt="%(asctime)s %(levelname)s %(message)s", datefmt="%Y-%m-%d %H:%M:%S"
    )
    ch = logging.StreamHandler(sys.stdout)
    ch.setLevel(logging.INFO)
    ch.setFormatter(fmt)
    logger.addHandler(ch)
    if log_path is not None:
        log_path.parent.mkdir(parents=True, exist_ok=True)
        fh = logging.FileHandler(log_path, encoding="utf-8")
        fh.setLevel(logging.DEBUG)
        fh.setFormatter(fmt)
        logger.addHandler(fh)
        logging.getLogger("src").addHandler(fh)
        logging.getLogger("src").setLevel(logging.DEBUG)
    return logger


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Run directional acceptance checks.")
    parser.add_argument("--checks", default=",".join(CHECKS), help="Comma-separated subset")
    parser.add_argument("--seeds", type=int, default=5, help="Seeds averaged per comparison")
    parser.add_argument("--users", type=int, default=5000, help="Synthetic users")
    parser.add_argument("--epochs", type=int, default=10)
    parser.add_argument("--out", type=Path, default=None, help="JSON result file")
    parser.add_argument("--log", type=Path, default=None, help="Log file path")
    return parser.parse_args(argv)


class Harness:
    """Shared dataset/model builders for the individual checks."""

    def __init__(self, users: int, epochs: int, seeds: int, logger: logging.Logger) -> None:
        _ensure_project_root()
        from src.services.data.dataset import CrossDomainDataset
        from src.services.data.split import cold_start_split
        from src.services.data.synth import SynthSpec, synth_generate
        from src.services.evaluation.evaluator import evaluate
        from src.services.model.config import ModelConfig
        from src.services.training.config import TrainConfig
        from src.services.training.pipeline import fit_variant

        self.users, self.epochs, self.seeds, self.logger = users, epochs, seeds, logger
        self._dataset_cls = CrossDomainDataset
        self._split = cold_start_split
        self._spec_cls, self._generate = SynthSpec, synth_generate
        self._evaluate = evaluate
        self._model_config, self._train_config = ModelConfig, TrainConfig
        self._fit = fit_variant

    def dataset(self, seed: int, *, angle: float = 0.0, schema: str = "logit", noise: float = 0.05):
        spec = self._spec_cls(
            n_users=self.users,
            n_items_src=max(50, self.users // 25),
            n_items_tgt=max(40, self.users // 50),
            overlap_frac=0.7,
            domain_shift_angle=angle,
            noise=noise,
            seed=seed,
            schema=schema,
        )
        result = self._generate(spec)
        return self._dataset_cls(
            result.records, result.side_info, schema=schema, name=f"synth-{seed}"
        )

    def configs(self, output_mode: str, seed: int):
        model = self._model_config(embed_dim=16, attn_dim=16, output_mode=output_mode)
        train = self._train_config(
            loss="bce" if output_mode == "logit" else "mse",
            lr=3e-3,
            batch_size=128,
            epochs=self.epochs,
            seed=seed,
        )
        return model, train

    def fit_and_score(self, variant: str, dataset, beta: float, seed: int, output_mode: str):
        split = self._split(dataset.records, beta, seed)
        model_config, train_config = self.configs(output_mode, seed)
        fitted = self._fit(variant, dataset, split, model_config, train_config)
        test = self._evaluate(fitted.model, dataset, split)
        return fitted, split, test


def check_learning(h: Harness) -> dict[str, Any]:
    from src.services.evaluation.experiments import run_learning_check

    started = time.perf_counter()
    check = run_learning_check(h.users, epochs=h.epochs, seed=0)
    in_budget = time.perf_counter() - started < LEARNING_BUDGET_S
    return {**check.model_dump(), "in_budget": in_budget, "passed": check.passed() and in_budget}


def check_ablation(h: Harness) -> dict[str, Any]:
    from src.services.evaluation.experiments import run_ablation_sweep

    per_variant: dict[str, list[float]] = {}
    for seed in range(h.seeds):
        dataset = h.dataset(seed, angle=60.0)
        split = h._split(dataset.records, 0.2, seed)
        model_config, train_config = h.configs("logit", seed)
        report = run_ablation_sweep(dataset, split, model_config, train_config)
        for row in report.rows:
            per_variant.setdefault(row["variant"], []).append(row["auc"])
    means = {variant: float(np.mean(values)) for variant, values in per_variant.items()}
    margin = means["dacdr"] - means["no_da_ia"]
    h.logger.info("Ablation mean AUC: %s", means)
    return {"mean_auc": means, "margin": margin, "passed": margin >= 0.01}


def check_cold_start(h: Harness) -> dict[str, Any]:
    maes: dict[str, list[float]] = {"dacdr": [], "emcdr_lite": []}
    for seed in range(h.seeds):
        dataset = h.dataset(seed, angle=60.0, schema="rating", noise=0.3)
        for variant in maes:
            _, _, test = h.fit_and_score(variant, dataset, 0.5, seed, "rating")
            maes[variant].append(test.metrics["mae"])
    means = {variant: float(np.mean(values)) for variant, values in maes.items()}
    return {"mean_mae": means, "passed": means["dacdr"] < means["emcdr_lite"]}


def _fresh_domain(h: Harness, seed: int, domain: str):
    """Same users and source items, a rotated preference and renamed target items."""
    base = h._generate(
        h._spec_cls(
            n_users=h.users,
            n_items_src=max(50, h.users // 25),
            n_items_tgt=max(40, h.users // 50),
            domain_shift_angle=90.0,
            noise=0.05,
            seed=seed,
            target_domain=domain,
        )
    )
    records = [
        r.model_copy(update={"item_id": "n" + r.item_id[1:]}) if r.domain_id == domain else r
        for r in base.records
    ]
    side_info = {("n" + k[1:] if k.startswith("t") else k): v for k, v in base.side_info.items()}
    return h._dataset_cls(records, side_info, target_domains=(domain,), name=f"fresh-{seed}")


def check_finetune(h: Harness) -> dict[str, Any]:
    from src.lib.policy import match_groups
    from src.services.training.finetune import FINETUNE_TRAINABLE, finetune

    seed, domain = 0, "fresh"
    base_data = h.dataset(seed)
    fitted, _, _ = h.fit_and_score("dacdr", base_data, 0.2, seed, "logit")
    model = fitted.model
    before = {name: tensor.data.copy() for name, tensor in model.params.items()}

    fresh = _fresh_domain(h, seed, domain)
    split = h._split(fresh.records, 0.2, seed, target_domains=(domain,))
    samples = fresh.target_samples(
        split, "train", "logit", max_len=model.config.max_seq_len, causal=model.config.causal
    )
    new_items = sorted({r.item_id for r in fresh.target_records})
    model.register_domain(domain, new_items)
    zero_shot = h._evaluate(model, fresh, split).metrics["auc"]
    _, train_config = h.configs("logit", seed)
    finetune(model, samples, train_config, domain_id=domain, new_items=new_items)
    tuned = h._evaluate(model, fresh, split).metrics["auc"]

    trainable = set(match_groups(model.params.names, FINETUNE_TRAINABLE))
    untouched = all(
        np.array_equal(before[name], model.params[name].data)
        for name in before
        if name not in trainable
    )
    return {
        "zero_shot_auc": zero_shot,
        "finetuned_auc": tuned,
        "frozen_groups_identical": untouched,
        "passed": untouched and tuned > zero_shot,
    }


def check_determinism(h: Harness) -> dict[str, Any]:
    from src.cli.main import main as cli_main

    users = str(min(h.users, 500))
    steps = [
        ["gen-data", "--users", users, "--overlap", "0.7", "--seed", "3", "--data-dir", "data"],
        ["train", "--data-dir", "data", "--seed", "3", "--epochs", "2", "--out-dir", "runs"],
        ["eval", "--data-dir", "data", "--checkpoint", "runs/dacdr.ckpt", "--out-dir", "runs"],
    ]
    cwd = os.getcwd()
    roots: list[Path] = []
    with tempfile.TemporaryDirectory() as tmp:
        for run in ("a", "b"):
            root = Path(tmp) / run
            root.mkdir()
            roots.append(root)
            os.chdir(root)
            try:
                for step in steps:
                    if cli_main(step) != 0:
                        return {"passed": False, "failed_step": step[0]}
            finally:
                os.chdir(cwd)
        a, b = roots
        same_files = all(
            filecmp.cmp(a / rel, b / rel, shallow=False)
            for rel in ("data/interactions.tsv", "runs/dacdr.ckpt", "runs/dacdr.eval.json")
        )
        train_a, train_b = (
            json.loads((root / "runs/dacdr.train.json").read_text(encoding="utf-8"))
            for root in roots
        )
        for report in (train_a, train_b):
            report.pop("wall_time_s")
    reports_equal = train_a == train_b
    return {
        "byte_identical": same_files,
        "train_report_equal": reports_equal,
        "passed": same_files and reports_equal,
    }


RUNNERS: dict[str, Callable[[Harness], dict[str, Any]]] = {
    "learning": check_learning,
    "ablation": check_ablation,
    "cold_start": check_cold_start,
    "finetune": check_finetune,
    "determinism": check_determinism,
}


def main(argv: list[str] | None = None) -> int:
    argv = argv if argv is not None else sys.argv[1:]
    load_dotenv(PROJECT_ROOT / ".env")
    args = parse_args(argv)
    logger = _build_logger(args.log)
    selected = [name.strip() for name in args.checks.split(",") if name.strip()]
    unknown = [name for name in selected if name not in RUNNERS]
    if unknown:
        logger.error("Unknown checks: %s (expected %s)", ", ".join(unknown), ", ".join(CHECKS))
        return 2

    harness = Harness(args.users, args.epochs, args.seeds, logger)
    from src.lib.format_table import format_table

    results: dict[str, dict[str, Any]] = {}
    for name in selected:
        started = time.perf_counter()
        logger.info("Running %s", name)
        results[name] = RUNNERS[name](harness)
        results[name]["seconds"] = round(time.perf_counter() - started, 1)
        logger.info("%s: %s", name, "PASS" if results[name]["passed"] else "FAIL")

    print(format_table([{"check": n, "passed": r["passed"], "seconds": r["seconds"]} for n, r in results.items()]))
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(json.dumps(results, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        logger.info("Wrote %s", args.out)
    return 0 if all(r["passed"] for r in results.values()) else 1


if __name__ == "__main__":
    raise SystemExit(main())
