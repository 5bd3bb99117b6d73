"""
Command-line interface for swinalign.

    swinalign gen-data   write synthetic train/val/test splits
    swinalign train      train one model, writing a run directory
    swinalign eval       score a run's checkpoint on a split
    swinalign gradcheck  finite-difference check of a micro model
    swinalign gradcam    saliency maps from a run's checkpoint
    swinalign ablation   the six-setup ablation over several seeds
    swinalign probe      linear-probe baseline on raw pixels

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

import argparse
import dataclasses
import logging
import os
import sys
import time
from typing import Dict, List, Optional, Sequence

import numpy as np

from swinalign.backbone.config import BackboneConfig
from swinalign.config import ExperimentConfig, from_pairs, load_config
from swinalign.data.dataset import Dataset
from swinalign.data.file_system_repo import FileSystemDatasetRepository
from swinalign.data.in_memory_repo import InMemoryDatasetRepository
from swinalign.data.synthetic import DEFAULT_FRACTIONS, SyntheticSpec, generate, split
from swinalign.fusion.projection import FusionConfig
from swinalign.heads.head import HeadConfig
from swinalign.losses.objective import LossConfig
from swinalign.model import ModelConfig, SwinAlignModel, check_model_gradients
from swinalign.training.ablation import run_ablation
from swinalign.training.evaluation import evaluate, load_model
from swinalign.training.gradcam import gradcam, write_gradcam, write_panel
from swinalign.training.metrics import write_metrics_csv, write_per_grade_csv
from swinalign.training.probe import linear_probe
from swinalign.training.trainer import BEST_CHECKPOINT, CONFIG_FILE, FINAL_CHECKPOINT, Trainer
from swinalign.utils.constants import HeadKinds, Splits
from swinalign.utils.errors import SwinAlignError, UsageError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def micro_config(head_kind: str = HeadKinds.MPHN) -> ModelConfig:
    """The smallest model that runs every component end to end."""
    return ModelConfig(
        backbone=BackboneConfig(
            image_size=16, in_channels=3, patch_size=4, embed_dim=8,
            depths=[1, 1], num_heads=[1, 2], window_size=2, mlp_ratio=4.0,
        ),
        fusion=FusionConfig(embed_dim=8),
        head=HeadConfig(kind=head_kind, num_classes=5, hidden_dim=16),
    )


def _parse_set(values: Optional[Sequence[str]]) -> Dict[str, str]:
    overrides = {}
    for item in values or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"--set expects key=value, got '{item}'")
        overrides[key.strip()] = value.strip()
    return overrides


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def experiment_from_args(args) -> ExperimentConfig:
    """defaults < --config file < --set key=value < dedicated flags."""
    overrides = _parse_set(getattr(args, "set", None))
    if getattr(args, "config", None):
        config = load_config(args.config, overrides)
    else:
        config = from_pairs(overrides.items())
    flags = {
        "seed": getattr(args, "seed", None),
        "data_dir": getattr(args, "data", None),
        "out_dir": getattr(args, "out", None),
        "head.kind": getattr(args, "head", None),
        "loss.lambda": getattr(args, "lambda_", None),
        "training.epochs": getattr(args, "epochs", None),
        "training.init_checkpoint": getattr(args, "init", None),
    }
    flags = {key: str(value) for key, value in flags.items() if value is not None}
    return config.with_overrides(flags) if flags else config


def _repository(data_dir: str) -> FileSystemDatasetRepository:
    if not os.path.isdir(data_dir):
        raise FileNotFoundError(f"Data directory '{data_dir}' does not exist")
    return FileSystemDatasetRepository(data_dir)


def _generated_repository(spec: SyntheticSpec) -> InMemoryDatasetRepository:
    """Synthetic splits built from ``spec`` and kept in memory."""
    repository = InMemoryDatasetRepository()
    for part in split(generate(spec), DEFAULT_FRACTIONS, spec.seed):
        repository.save(part)
    return repository


def cmd_gen_data(args) -> int:
    config = experiment_from_args(argparse.Namespace(config=args.config, set=args.set))
    spec = config.data
    changes = {
        "seed": args.seed,
        "num_samples": args.per_grade,
        "image_size": args.size,
        "noise_sigma": args.noise,
    }
    spec = dataclasses.replace(spec, **{k: v for k, v in changes.items() if v is not None})
    dataset = generate(spec)
    repository = FileSystemDatasetRepository(args.out)
    for part in split(dataset, DEFAULT_FRACTIONS, spec.seed):
        repository.save(part)
        logger.info("Wrote %d '%s' samples to %s", len(part), part.split, args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    config = experiment_from_args(args)
    repository = _repository(config.data_dir)
    train_set = repository.require(Splits.TRAIN)
    val_set = repository.load(Splits.VAL)
    result = Trainer(config).fit(train_set, val_set, config.out_dir)
    logger.info(
        "Finished after %d epochs; best epoch %d (val B-ACC %.4f)",
        result.epochs_run, result.best_epoch, result.best_balanced_accuracy,
    )
    return EXIT_OK


def _run_config(run_dir: str) -> ExperimentConfig:
    path = os.path.join(run_dir, CONFIG_FILE)
    if not os.path.exists(path):
        raise FileNotFoundError(f"Run directory '{run_dir}' has no {CONFIG_FILE}")
    return load_config(path)


def _checkpoint_path(run_dir: str, which: str) -> str:
    if which in ("best", "final"):
        return os.path.join(run_dir, BEST_CHECKPOINT if which == "best" else FINAL_CHECKPOINT)
    return which


def cmd_eval(args) -> int:
    config = _run_config(args.run)
    data_dir = args.data or config.data_dir
    dataset = _repository(data_dir).require(args.split)
    model = load_model(_checkpoint_path(args.run, args.checkpoint), config.model, config.seed)
    report = evaluate(model, dataset, config.training.eval_batch_size)
    out_dir = args.out or args.run
    write_metrics_csv(report, os.path.join(out_dir, f"eval_{args.split}.csv"))
    write_per_grade_csv(report, os.path.join(out_dir, f"eval_{args.split}_per_grade.csv"))
    print(f"{args.split}: {report.summary()}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    model = SwinAlignModel(micro_config(args.head), seed=args.seed)
    rng = np.random.default_rng(args.seed)
    images = rng.uniform(0.0, 1.0, size=(args.batch, 16, 16, 3))
    labels = rng.integers(0, 5, size=args.batch)
    started = time.perf_counter()
    report = check_model_gradients(
        model, images, labels, LossConfig(lambda_=args.lambda_), h=args.h, tol=args.tol,
        max_entries=args.max_entries or None, seed=args.seed,
    )
    elapsed = time.perf_counter() - started
    print(f"max relative error {report.max_rel_error:.3e} over {report.entries_checked} entries"
          f" (worst {report.worst}, {elapsed:.1f}s)")
    logger.info("gradcheck %s at tol %g", "passed" if report.passed else "FAILED", args.tol)
    return EXIT_OK if report.passed else EXIT_RUNTIME


def cmd_gradcam(args) -> int:
    config = _run_config(args.run)
    dataset = _repository(args.data or config.data_dir).require(args.split)
    model = load_model(_checkpoint_path(args.run, args.checkpoint), config.model, config.seed)
    out = args.out or os.path.join(args.run, "gradcam")
    if args.panel:
        write_panel(model, dataset, out + "_panel.pgm")
        return EXIT_OK
    if not 0 <= args.index < len(dataset):
        raise UsageError(f"--index {args.index} is out of range for {len(dataset)} samples")
    grade = args.grade if args.grade is not None else int(dataset.labels[args.index])
    cam = gradcam(model, dataset.images[args.index], grade)
    write_gradcam(cam, f"{out}_{args.index}_g{grade}", config.backbone.image_size)
    return EXIT_OK


def cmd_ablation(args) -> int:
    config = experiment_from_args(args)
    repository = _generated_repository(config.data) if args.generate else _repository(config.data_dir)
    rows, _ = run_ablation(
        config,
        repository.require(Splits.TRAIN),
        repository.load(Splits.VAL),
        repository.require(Splits.TEST),
        config.out_dir,
        setups=args.setups,
        seeds=args.seeds,
        workers=args.workers,
    )
    print("setup,head,ncsl,ACC,B-ACC,F1")
    for row in rows:
        print(f"{row.setup.id},{row.setup.head_kind},{'yes' if row.setup.ncsl else 'no'},"
              f"{row.accuracy:.4f},{row.balanced_accuracy:.4f},{row.macro_f1:.4f}")
    return EXIT_OK


def cmd_probe(args) -> int:
    repository = _repository(args.data)
    train_set: Dataset = repository.require(Splits.TRAIN)
    test_set: Dataset = repository.require(args.split)
    num_classes = int(max(train_set.labels.max(), test_set.labels.max())) + 1
    report = linear_probe(train_set, test_set, max(num_classes, 2), seed=args.seed)
    print(f"linear probe {args.split}: {report.summary()}")
    return EXIT_OK


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value experiment file")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="swinalign", description="Stage-feature aligned windowed-attention grading.")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    commands = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=ArgumentParser)

    p = commands.add_parser("gen-data", help="generate synthetic splits")
    _add_config_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--per-grade", type=int, help="images per grade before splitting")
    p.add_argument("--size", type=int)
    p.add_argument("--noise", type=float)
    p.set_defaults(handler=cmd_gen_data)

    p = commands.add_parser("train", help="train one model")
    _add_config_args(p)
    p.add_argument("--data")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--head", choices=HeadKinds.ALL)
    p.add_argument("--lambda", dest="lambda_", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--init", metavar="CHECKPOINT", help="start backbone and projections from a .kckp file")
    p.set_defaults(handler=cmd_train)

    p = commands.add_parser("eval", help="evaluate a run")
    p.add_argument("--run", required=True)
    p.add_argument("--data")
    p.add_argument("--split", default=Splits.TEST, choices=Splits.ALL)
    p.add_argument("--checkpoint", default="best", help="best, final or a .kckp path")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_eval)

    p = commands.add_parser("gradcheck", help="finite-difference check of a micro model")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--head", choices=HeadKinds.ALL, default=HeadKinds.MPHN)
    p.add_argument("--lambda", dest="lambda_", type=float, default=0.1)
    p.add_argument("--batch", type=int, default=2)
    p.add_argument("--max-entries", type=int, default=0, help="entries per parameter, 0 for all")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_gradcheck)

    p = commands.add_parser("gradcam", help="GradCAM maps from a run")
    p.add_argument("--run", required=True)
    p.add_argument("--data")
    p.add_argument("--split", default=Splits.TEST, choices=Splits.ALL)
    p.add_argument("--checkpoint", default="best")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--grade", type=int, help="grade to explain; defaults to the true grade")
    p.add_argument("--panel", action="store_true", help="write a per-grade panel instead")
    p.add_argument("--out", help="output path prefix")
    p.set_defaults(handler=cmd_gradcam)

    p = commands.add_parser("ablation", help="run the six-setup ablation")
    _add_config_args(p)
    p.add_argument("--data")
    p.add_argument("--out")
    p.add_argument("--epochs", type=int)
    p.add_argument("--seeds", type=_int_list)
    p.add_argument("--setups", type=_int_list)
    p.add_argument("--workers", type=int)
    p.add_argument("--generate", action="store_true", help="build the splits from the data.* keys instead of reading --data")
    p.set_defaults(handler=cmd_ablation)

    p = commands.add_parser("probe", help="linear probe on raw pixels")
    p.add_argument("--data", required=True)
    p.add_argument("--split", default=Splits.TEST, choices=Splits.ALL)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_probe)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code is None else int(e.code)
    if getattr(args, "handler", None) is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT, stream=sys.stderr)
    try:
        return args.handler(args)
    except UsageError as e:
        print(f"swinalign: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, SwinAlignError, ValueError) as e:
        logger.error("%s", e)
        print(f"swinalign: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
