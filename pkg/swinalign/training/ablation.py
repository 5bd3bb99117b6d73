"""
Ablation runner for swinalign.

Six setups cross the three head variants with the regularizer on or off:

    1 sphn          2 sphn + ncsl
    3 mphn          4 mphn + ncsl
    5 mlpreg        6 mlpreg + ncsl

Every (setup, seed) run trains on the same splits and writes to its own
directory; the report holds one row per run and the median over seeds per
setup.
"""

import csv
import dataclasses
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from swinalign.config import ExperimentConfig
from swinalign.data.dataset import Dataset
from swinalign.heads.head import HeadConfig
from swinalign.losses.objective import LossConfig
from swinalign.training.evaluation import evaluate
from swinalign.training.trainer import Trainer
from swinalign.utils.constants import HeadKinds
from swinalign.utils.errors import ConfigError, ContractError

logger = logging.getLogger(__name__)

MIN_SEEDS = 3


@dataclass(frozen=True)
class AblationSetup:
    id: int
    head_kind: str
    ncsl: bool

    @property
    def label(self) -> str:
        return self.head_kind.upper() + (" + NCSL" if self.ncsl else "")


SETUPS: Dict[int, AblationSetup] = {
    1: AblationSetup(1, HeadKinds.SPHN, False),
    2: AblationSetup(2, HeadKinds.SPHN, True),
    3: AblationSetup(3, HeadKinds.MPHN, False),
    4: AblationSetup(4, HeadKinds.MPHN, True),
    5: AblationSetup(5, HeadKinds.MLPREG, False),
    6: AblationSetup(6, HeadKinds.MLPREG, True),
}


@dataclass
class RunResult:
    setup: int
    seed: int
    accuracy: float
    balanced_accuracy: float
    macro_f1: float


@dataclass
class AblationRow:
    setup: AblationSetup
    accuracy: float
    balanced_accuracy: float
    macro_f1: float
    runs: int


def setup_config(base: ExperimentConfig, setup_id: int, seed: int, out_dir: Optional[str] = None) -> ExperimentConfig:
    """
    The experiment of one (setup, seed) run: ``base`` with only the head kind,
    the regularizer flag, the seed and the output directory replaced.
    """
    if setup_id not in SETUPS:
        raise ConfigError(f"Unknown ablation setup {setup_id}; expected 1..6")
    setup = SETUPS[setup_id]
    return dataclasses.replace(
        base,
        seed=seed,
        out_dir=out_dir or base.out_dir,
        head=HeadConfig(kind=setup.head_kind, num_classes=base.head.num_classes, hidden_dim=base.head.hidden_dim),
        loss=LossConfig(lambda_=base.loss.lambda_, bce_eps=base.loss.bce_eps, ncsl_enabled=setup.ncsl),
    )


def run_one(
    config: ExperimentConfig,
    setup_id: int,
    train_set: Dataset,
    val_set: Optional[Dataset],
    test_set: Dataset,
) -> RunResult:
    result = Trainer(config).fit(train_set, val_set, config.out_dir)
    report = evaluate(result.model, test_set, config.training.eval_batch_size)
    logger.info("setup %d seed %d: %s", setup_id, config.seed, report.summary())
    return RunResult(setup_id, config.seed, report.accuracy, report.balanced_accuracy, report.macro_f1)


def _run_job(job: Tuple[ExperimentConfig, int, Dataset, Optional[Dataset], Dataset]) -> RunResult:
    return run_one(*job)


def summarize(results: Sequence[RunResult], setups: Sequence[int]) -> List[AblationRow]:
    """Median over seeds of each metric, one row per setup in the order given."""
    rows = []
    for setup_id in setups:
        runs = [r for r in results if r.setup == setup_id]
        if not runs:
            continue
        rows.append(AblationRow(
            SETUPS[setup_id],
            float(np.median([r.accuracy for r in runs])),
            float(np.median([r.balanced_accuracy for r in runs])),
            float(np.median([r.macro_f1 for r in runs])),
            len(runs),
        ))
    return rows


def run_ablation(
    base: ExperimentConfig,
    train_set: Dataset,
    val_set: Optional[Dataset],
    test_set: Dataset,
    out_dir: str,
    setups: Optional[Sequence[int]] = None,
    seeds: Optional[Sequence[int]] = None,
    workers: Optional[int] = None,
) -> Tuple[List[AblationRow], List[RunResult]]:
    """
    Train every requested setup for every seed and tabulate test metrics.

    :raises ContractError: With fewer than three seeds.
    """
    setups = list(setups if setups is not None else base.ablation.setups)
    seeds = list(seeds if seeds is not None else base.ablation.seeds)
    workers = workers or base.ablation.workers
    if len(seeds) < MIN_SEEDS:
        raise ContractError(f"An ablation needs at least {MIN_SEEDS} seeds, got {len(seeds)}")
    if len(test_set) == 0:
        raise ContractError("An ablation needs a non-empty test split")

    jobs = [
        (setup_config(base, s, seed, os.path.join(out_dir, f"setup{s}", f"seed{seed}")), s, train_set, val_set, test_set)
        for s in setups
        for seed in seeds
    ]
    logger.info("Running %d ablation jobs with %d worker(s)", len(jobs), workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [_run_job(job) for job in jobs]

    rows = summarize(results, setups)
    write_runs_csv(results, os.path.join(out_dir, "runs.csv"))
    write_ablation_csv(rows, os.path.join(out_dir, "ablation.csv"))
    return rows, results


def write_runs_csv(results: Sequence[RunResult], path: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["setup", "seed", "ACC", "B-ACC", "F1"])
        for r in results:
            writer.writerow([r.setup, r.seed, repr(r.accuracy), repr(r.balanced_accuracy), repr(r.macro_f1)])


def write_ablation_csv(rows: Sequence[AblationRow], path: str) -> None:
    """Median table ``setup,head,ncsl,ACC,B-ACC,F1``."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["setup", "head", "ncsl", "ACC", "B-ACC", "F1"])
        for row in rows:
            writer.writerow([
                row.setup.id,
                row.setup.head_kind,
                "yes" if row.setup.ncsl else "no",
                repr(row.accuracy),
                repr(row.balanced_accuracy),
                repr(row.macro_f1),
            ])
