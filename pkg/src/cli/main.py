#!/usr/bin/env python3
"""Command-line entry point for the cross-domain recommendation experiments.

Subcommands:
  gen-data   synthesize a cross-domain dataset (two TSVs plus the generator settings)
  train      fit one variant on a cold-start split and write a checkpoint
  eval       score a checkpoint, or run ablation / variant / beta sweeps
  finetune   adapt a trained model to a new target domain
  gradcheck  finite-difference check of every op and of whole models

Usage example:
  python scripts/dacdr.py gen-data --users 1000 --overlap 0.7 --seed 1 --data-dir data/synth
  python scripts/dacdr.py train --data-dir data/synth --variant dacdr --epochs 5
  python scripts/dacdr.py eval --data-dir data/synth --checkpoint runs/dacdr.ckpt
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from dotenv import load_dotenv

from src.cli.config import RunConfig, load_run_config
from src.lib.errors import ConfigError, DacdrError, GradCheckFailure, TrainingDivergedError, UsageError
from src.lib.format_table import format_table
from src.lib.settings import log_file, log_level
from src.services.data.dataset import CrossDomainDataset
from src.services.data.split import ColdStartSplit, cold_start_split
from src.services.data.synth import synth_generate
from src.services.evaluation.evaluator import evaluate
from src.services.evaluation.experiments import run_ablation_sweep, run_beta_sweep, run_variant_sweep
from src.services.evaluation.reports import report_table, write_report
from src.services.model.factory import VARIANTS, load_model, save_model
from src.services.training.finetune import finetune
from src.services.training.gradcheck_suite import run_suite
from src.services.training.pipeline import fit_variant

PROJECT_ROOT = Path(__file__).resolve().parents[2]
CONFIG_KEYS = (set(RunConfig.model_fields) - {"data_schema"}) | {"schema"}

logger = logging.getLogger(__name__)


def _build_logger(level: str, log_path: Path | None) -> logging.Logger:
    """Configure the `src` logger tree: console at `level`, optional file at DEBUG."""
    root = logging.getLogger("src")
    root.setLevel(logging.DEBUG)
    root.handlers.clear()
    root.propagate = False

    fmt = logging.Formatter(
        fmt="%(asctime)s %(levelname)s %(message)s", datefmt="%Y-%m-%d %H:%M:%S"
    )
    ch = logging.StreamHandler(sys.stderr)
    ch.setLevel(getattr(logging, level, logging.INFO))
    ch.setFormatter(fmt)
    root.addHandler(ch)
    if log_path is not None:
        log_path.parent.mkdir(parents=True, exist_ok=True)
        fh = logging.FileHandler(log_path, encoding="utf-8")
        fh.setLevel(logging.DEBUG)
        fh.setFormatter(fmt)
        root.addHandler(fh)
    return root


# -- argument parsing ---------------------------------------------------------


def _common_flags() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", type=Path, default=None, help="key = value config file")
    parser.add_argument("--log", type=Path, default=None, help="Extra DEBUG log file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out-dir", dest="out_dir", default=None)
    return parser


def _data_flags() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--data-dir", dest="data_dir", default=None)
    parser.add_argument("--interactions", default=None, help="Interactions TSV")
    parser.add_argument("--side-info", dest="side_info", default=None, help="Side-info TSV")
    parser.add_argument("--schema", choices=("logit", "rating"), default=None)
    parser.add_argument("--source-domain", dest="source_domain", default=None)
    parser.add_argument(
        "--target-domains", dest="target_domains", default=None, help="Comma-separated"
    )
    parser.add_argument("--beta", type=float, default=None, help="Cold-start test fraction")
    parser.add_argument("--split-seed", dest="split_seed", type=int, default=None)
    return parser


def _model_flags() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--variant", default=None, help=f"One of {', '.join(VARIANTS)}")
    parser.add_argument("--embed-dim", dest="embed_dim", type=int, default=None)
    parser.add_argument("--attn-dim", dest="attn_dim", type=int, default=None)
    parser.add_argument("--max-seq-len", dest="max_seq_len", type=int, default=None)
    parser.add_argument("--channels", type=int, default=None)
    parser.add_argument("--encoder-hidden", dest="encoder_hidden", default=None)
    parser.add_argument("--head-hidden", dest="head_hidden", default=None)
    parser.add_argument("--output-mode", dest="output_mode", choices=("logit", "rating"), default=None)
    parser.add_argument(
        "--attention-semantics",
        dest="attention_semantics",
        choices=("gated", "literal"),
        default=None,
    )
    parser.add_argument(
        "--user-transfer", dest="user_transfer", choices=("encoder", "meta_bridge"), default=None
    )
    parser.add_argument(
        "--bridge-kind", dest="bridge_kind", choices=("personalized", "fixed"), default=None
    )
    parser.add_argument("--loss", choices=("bce", "mse"), default=None)
    parser.add_argument("--lr", type=float, default=None)
    parser.add_argument("--optimizer", choices=("sgd", "adam"), default=None)
    parser.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    parser.add_argument("--epochs", type=int, default=None)
    parser.add_argument("--freeze-groups", dest="freeze_groups", default=None)
    parser.add_argument(
        "--grad-diag", dest="grad_diag", action="store_const", const=True, default=None
    )
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--checkpoint", default=None)
    parser.add_argument("--report", default=None, help="Report JSON path")
    return parser


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="dacdr", description="Cross-domain cold-start recommendation experiments."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common, data, model = _common_flags(), _data_flags(), _model_flags()

    gen = sub.add_parser("gen-data", parents=[common], help="Synthesize a dataset")
    gen.add_argument("--data-dir", dest="data_dir", default=None, help="Output directory")
    gen.add_argument("--schema", choices=("logit", "rating"), default=None)
    gen.add_argument("--source-domain", dest="source_domain", default=None)
    gen.add_argument("--target-domains", dest="target_domains", default=None)
    gen.add_argument("--users", dest="synth_users", type=int, default=None)
    gen.add_argument("--items-src", dest="synth_items_src", type=int, default=None)
    gen.add_argument("--items-tgt", dest="synth_items_tgt", type=int, default=None)
    gen.add_argument("--overlap", dest="synth_overlap", type=float, default=None)
    gen.add_argument("--latent-dim", dest="synth_latent_dim", type=int, default=None)
    gen.add_argument("--shift-angle", dest="synth_shift_angle", type=float, default=None)
    gen.add_argument("--noise", dest="synth_noise", type=float, default=None)
    gen.add_argument("--src-events", dest="synth_src_events", type=int, default=None)
    gen.add_argument("--tgt-events", dest="synth_tgt_events", type=int, default=None)
    gen.add_argument("--signal-scale", dest="synth_signal_scale", type=float, default=None)

    sub.add_parser("train", parents=[common, data, model], help="Train one variant")

    ev = sub.add_parser("eval", parents=[common, data, model], help="Evaluate or sweep")
    ev.add_argument("--ablation", action="store_true", help="Four-row ablation sweep")
    ev.add_argument("--variants", default=None, help="Comma-separated variant sweep")
    ev.add_argument("--sweep-beta", dest="sweep_beta", default=None, help="e.g. 0.2,0.5,0.8")

    ft = sub.add_parser("finetune", parents=[common, data, model], help="Adapt to a new domain")
    ft.add_argument("--domain", required=True, help="New target domain id")
    ft.add_argument("--output", type=Path, default=None, help="Fine-tuned checkpoint path")

    gc = sub.add_parser("gradcheck", parents=[common], help="Finite-difference checks")
    gc.add_argument("--op", default=None, help="Restrict to one op or end-to-end check")
    gc.add_argument("--e2e-only", dest="e2e_only", action="store_true")
    gc.add_argument("--eps", type=float, default=1e-5)
    return parser.parse_args(argv)


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    return {key: value for key, value in vars(args).items() if key in CONFIG_KEYS}


def _csv(value: str, cast: type = str) -> list[Any]:
    try:
        return [cast(part.strip()) for part in value.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"Cannot parse list '{value}'") from None


# -- shared helpers -----------------------------------------------------------


def _dataset(config: RunConfig, target_domains: Sequence[str] | None = None) -> CrossDomainDataset:
    path = config.interactions_path()
    if path is None:
        raise UsageError("No dataset given: set data_dir or interactions")
    if not path.is_file():
        raise UsageError(f"Interactions file not found: {path}")
    return CrossDomainDataset.from_files(
        path,
        config.side_info_path(),
        schema=config.data_schema,
        source_domain=config.source_domain,
        target_domains=tuple(target_domains or config.target_domains),
        max_malformed_frac=config.max_malformed_frac,
    )


def _split(dataset: CrossDomainDataset, beta: float, seed: int) -> ColdStartSplit:
    return cold_start_split(
        dataset.records,
        beta,
        seed,
        source_domain=dataset.source_domain,
        target_domains=dataset.target_domains,
    )


def _out_path(config: RunConfig, explicit: str | Path | None, name: str) -> Path:
    return Path(explicit) if explicit else Path(config.out_dir) / name


# -- subcommands --------------------------------------------------------------


def cmd_gen_data(config: RunConfig) -> int:
    try:
        spec = config.build_synth_spec()
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    out_dir = Path(config.data_dir) if config.data_dir else Path(config.out_dir) / "data"
    result = synth_generate(spec, out_dir)
    print(f"interactions: {result.interactions_path}")
    print(f"side info:    {result.side_info_path}")
    print(f"spec:         {result.spec_path}")
    print(format_table([result.stats]))
    return 0


def cmd_train(config: RunConfig) -> int:
    model_config = config.build_model_config()
    train_config = config.build_train_config()
    dataset = _dataset(config)
    split = _split(dataset, config.beta, config.effective_split_seed)
    report_path = _out_path(config, config.report, f"{config.variant}.train.json")
    try:
        fitted = fit_variant(config.variant, dataset, split, model_config, train_config)
    except TrainingDivergedError as exc:
        if exc.report is not None:
            exc.report.config["run"] = config.echo()
            write_report(report_path, exc.report)
        raise

    checkpoint = _out_path(config, config.checkpoint, f"{config.variant}.ckpt")
    save_model(
        fitted.model,
        checkpoint,
        extra={"split": {"beta": split.beta, "seed": split.seed}, "run": config.echo()},
    )
    report = fitted.report
    report.checkpoint = str(checkpoint)
    report.config["run"] = config.echo()
    write_report(report_path, report)
    final = report.losses[-1] if report.losses else None
    print(format_table([{"variant": report.variant, "epochs": report.epochs, "final_loss": final}]))
    print(f"checkpoint: {checkpoint}")
    print(f"report:     {report_path}")
    return 0


def cmd_eval(config: RunConfig, args: argparse.Namespace) -> int:
    dataset = _dataset(config)
    seed = config.effective_split_seed
    if args.sweep_beta:
        reports = run_beta_sweep(
            _csv(args.sweep_beta, float),
            config.variant,
            dataset,
            seed,
            config.build_model_config(),
            config.build_train_config(),
            workers=config.workers,
        )
        for report in reports:
            report.config["run"] = config.echo()
        path = write_report(_out_path(config, config.report, f"{config.variant}.beta_sweep.json"), reports)
        print(report_table(reports))
        print(f"report: {path}")
        return 0

    if args.ablation or args.variants:
        split = _split(dataset, config.beta, seed)
        model_config, train_config = config.build_model_config(), config.build_train_config()
        if args.ablation:
            report = run_ablation_sweep(dataset, split, model_config, train_config, workers=config.workers)
        else:
            report = run_variant_sweep(
                _csv(args.variants), dataset, split, model_config, train_config, workers=config.workers
            )
        report.config["run"] = config.echo()
        path = write_report(_out_path(config, config.report, f"{report.variant}.eval.json"), report)
        print(report_table(report))
        print(f"report: {path}")
        return 0

    if not config.checkpoint:
        raise UsageError("eval needs --checkpoint unless --ablation, --variants or --sweep-beta is given")
    model, meta = load_model(config.checkpoint)
    bound = meta.get("split") or {}
    beta = float(bound.get("beta", config.beta))
    split_seed = int(bound.get("seed", seed))
    if (beta, split_seed) != (config.beta, seed):
        logger.warning(
            "Checkpoint is bound to split beta=%.2f seed=%d; ignoring beta=%.2f seed=%d",
            beta,
            split_seed,
            config.beta,
            seed,
        )
    split = _split(dataset, beta, split_seed)
    report = evaluate(model, dataset, split, workers=config.workers)
    report.config = {"run": config.echo(), "checkpoint": config.checkpoint, "train": meta.get("run", {})}
    path = write_report(_out_path(config, config.report, f"{model.variant}.eval.json"), report)
    print(report_table(report))
    print(f"report: {path}")
    return 0


def cmd_finetune(config: RunConfig, args: argparse.Namespace) -> int:
    if not config.checkpoint:
        raise UsageError("finetune needs --checkpoint (the base model)")
    model, meta = load_model(config.checkpoint)
    train_config = config.build_train_config()
    if train_config.loss != model.config.loss:
        raise ConfigError(
            f"Loss '{train_config.loss}' does not match the base model's '{model.config.loss}'"
        )
    dataset = _dataset(config, (args.domain,))
    split = _split(dataset, config.beta, config.effective_split_seed)
    mode = model.config.output_mode
    samples = dataset.target_samples(
        split, "train", mode, max_len=model.config.max_seq_len, causal=model.config.causal
    )
    new_items = sorted({record.item_id for record in dataset.target_records})

    model.register_domain(args.domain, new_items)
    zero_shot = evaluate(model, dataset, split, workers=config.workers)
    report = finetune(model, samples, train_config, domain_id=args.domain, new_items=new_items)
    tuned = evaluate(model, dataset, split, workers=config.workers)

    output = args.output or Path(config.out_dir) / f"{model.variant}.{args.domain}.ckpt"
    save_model(
        model,
        output,
        extra={
            "split": {"beta": split.beta, "seed": split.seed},
            "run": config.echo(),
            "base_checkpoint": config.checkpoint,
            "base_run": meta.get("run", {}),
        },
    )
    report.checkpoint = str(output)
    report.config["run"] = config.echo()
    payload = {
        "train": report.model_dump(mode="json"),
        "zero_shot": zero_shot.model_dump(mode="json"),
        "finetuned": tuned.model_dump(mode="json"),
    }
    path = write_report(
        _out_path(config, config.report, f"{model.variant}.{args.domain}.finetune.json"), payload
    )
    rows = [
        {"stage": "zero_shot", **zero_shot.metrics, "samples": zero_shot.samples},
        {"stage": "finetuned", **tuned.metrics, "samples": tuned.samples},
    ]
    print(format_table(rows))
    print(f"checkpoint: {output}")
    print(f"report:     {path}")
    return 0


def cmd_gradcheck(config: RunConfig, args: argparse.Namespace) -> int:
    results = run_suite(args.op, e2e_only=args.e2e_only, seed=config.seed, eps=args.eps)
    payload = {
        "checks": [result.as_record() for result in results],
        "op": args.op,
        "e2e_only": args.e2e_only,
        "eps": args.eps,
        "seed": config.seed,
        "config": config.echo(),
    }
    path = write_report(_out_path(config, config.report, "gradcheck.json"), payload)
    print(format_table([result.as_row() for result in results]))
    print(f"report: {path}")
    failed = [result.name for result in results if not result.passed]
    if failed:
        raise GradCheckFailure(f"Gradient check failed for: {', '.join(failed)}")
    return 0


def run(args: argparse.Namespace) -> int:
    config = load_run_config(args.config, _overrides(args))
    if args.command == "gen-data":
        return cmd_gen_data(config)
    if args.command == "train":
        return cmd_train(config)
    if args.command == "eval":
        return cmd_eval(config, args)
    if args.command == "finetune":
        return cmd_finetune(config, args)
    return cmd_gradcheck(config, args)


def main(argv: list[str] | None = None) -> int:
    argv = argv if argv is not None else sys.argv[1:]
    load_dotenv(PROJECT_ROOT / ".env")
    args = parse_args(argv)
    extra_log = args.log or (Path(log_file()) if log_file() else None)
    _build_logger(log_level(), extra_log)
    try:
        return run(args)
    except DacdrError as exc:
        logger.debug("%s failed", args.command, exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


__all__ = ["main", "parse_args", "run"]


if __name__ == "__main__":
    raise SystemExit(main())
