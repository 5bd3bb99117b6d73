import csv
import os
import time

import pytest

from swinalign.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main, micro_config
from swinalign.data import FileSystemDatasetRepository
from swinalign.model import SwinAlignModel

from conftest import micro_experiment

TINY_DATA = [
    "--size", "16", "--per-grade", "10",
    "--set", "data.band_height=2", "--set", "data.base_gap=6",
    "--set", "data.global_gap=1", "--set", "data.jitter=1",
]


def test_usage_errors(capsys):
    assert main([]) == EXIT_USAGE
    assert main(["transmogrify"]) == EXIT_USAGE
    assert main(["train", "--set", "nonsense"]) == EXIT_USAGE
    assert "nonsense" in capsys.readouterr().err


def test_missing_config_is_a_runtime_failure(tmp_path, capsys):
    missing = str(tmp_path / "missing.cfg")
    assert main(["train", "--config", missing]) == EXIT_RUNTIME
    assert "missing.cfg" in capsys.readouterr().err


def test_micro_config_builds():
    model = SwinAlignModel(micro_config("sphn"), seed=0)
    assert model.kind == "sphn"


def test_gradcheck_command(capsys):
    assert main(["gradcheck", "--max-entries", "2"]) == EXIT_OK
    assert "max relative error" in capsys.readouterr().out


@pytest.mark.slow
def test_gradcheck_over_every_entry_within_a_minute(capsys):
    started = time.perf_counter()
    assert main(["gradcheck"]) == EXIT_OK
    assert time.perf_counter() - started < 60.0
    entries = SwinAlignModel(micro_config()).num_parameters()
    assert f"over {entries} entries" in capsys.readouterr().out


@pytest.fixture
def data_dir(tmp_path):
    out = str(tmp_path / "data")
    assert main(["gen-data", "--out", out, "--seed", "1"] + TINY_DATA) == EXIT_OK
    return out


def test_gen_data_writes_three_splits(data_dir):
    repository = FileSystemDatasetRepository(data_dir)
    assert repository.list_splits() == ["train", "val", "test"]
    assert [len(repository.require(s)) for s in ("train", "val", "test")] == [35, 5, 10]
    assert repository.require("train").images.shape[1:] == (16, 16, 3)


def test_train_eval_gradcam(data_dir, tmp_path, capsys):
    config_path = str(tmp_path / "micro.cfg")
    micro_experiment().save(config_path)
    run_dir = str(tmp_path / "run")

    assert main(["train", "--config", config_path, "--data", data_dir, "--out", run_dir]) == EXIT_OK
    for name in ("config.cfg", "metrics.log", "final.kckp", "best.kckp"):
        assert os.path.exists(os.path.join(run_dir, name)), name

    assert main(["eval", "--run", run_dir, "--checkpoint", "final"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("test: ACC")
    with open(os.path.join(run_dir, "eval_test.csv"), encoding="utf-8") as f:
        rows = dict(list(csv.reader(f))[1:])
    assert 0.0 <= float(rows["balanced_accuracy"]) <= 1.0

    assert main(["gradcam", "--run", run_dir, "--index", "0", "--grade", "3"]) == EXIT_OK
    assert os.path.exists(os.path.join(run_dir, "gradcam_0_g3.kten"))
    assert os.path.exists(os.path.join(run_dir, "gradcam_0_g3.pgm"))
    assert main(["gradcam", "--run", run_dir, "--panel"]) == EXIT_OK
    assert os.path.exists(os.path.join(run_dir, "gradcam_panel.pgm"))

    assert main(["gradcam", "--run", run_dir, "--index", "99"]) == EXIT_USAGE
    assert main(["eval", "--run", str(tmp_path / "nowhere")]) == EXIT_RUNTIME

    tuned = str(tmp_path / "tuned")
    init = os.path.join(run_dir, "final.kckp")
    train_args = ["train", "--config", config_path, "--data", data_dir, "--head", "sphn"]
    assert main(train_args + ["--out", tuned, "--init", init]) == EXIT_OK
    with open(os.path.join(tuned, "config.cfg"), encoding="utf-8") as f:
        assert f"training.init_checkpoint = {init}\n" in f.read()
    missing = str(tmp_path / "missing.kckp")
    assert main(train_args + ["--out", str(tmp_path / "never"), "--init", missing]) == EXIT_RUNTIME


def test_ablation_on_generated_splits(tmp_path, capsys):
    config_path = str(tmp_path / "micro.cfg")
    micro_experiment().save(config_path)
    out = str(tmp_path / "ablation")
    args = [
        "ablation", "--generate", "--config", config_path, "--set", "data.num_samples=10",
        "--out", out, "--setups", "3,4", "--seeds", "0,1,2",
    ]
    assert main(args) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "setup,head,ncsl,ACC,B-ACC,F1"
    assert [line.split(",")[:3] for line in lines[1:]] == [["3", "mphn", "no"], ["4", "mphn", "yes"]]
    assert os.path.exists(os.path.join(out, "setup4", "seed2", "final.kckp"))
