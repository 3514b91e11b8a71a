"""Command-line interface end to end, via click's test runner."""

import json
import sys
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner
from PIL import Image

from augsearch.cli import main
from augsearch.controller import SearchLog
from augsearch.datasets import LabeledDataset, save_cifar10_binary, synth_invariance
from augsearch.policy import parse_policy
from augsearch.rng import stream_rng


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def image_dir(tmp_path):
    d = tmp_path / "imgs"
    d.mkdir()
    rng = stream_rng(1)
    for i in range(3):
        arr = rng.integers(0, 256, (32, 32, 3)).astype(np.uint8)
        Image.fromarray(arr).save(d / f"img{i}.png")
    return d


def read_images(d: Path):
    return {f.name: np.asarray(Image.open(f)) for f in sorted(d.glob("*.png"))}


class TestAugment:
    def test_outputs_one_png_per_input(self, runner, image_dir, tmp_path):
        out = tmp_path / "out"
        res = runner.invoke(main, [
            "augment", "--policy", "cifar10", "--input", str(image_dir),
            "--output", str(out), "--seed", "3",
        ])
        assert res.exit_code == 0, res.output
        assert len(list(out.glob("*.png"))) == 3

    def test_thread_count_does_not_change_output(self, runner, image_dir, tmp_path):
        outs = []
        for threads in ("1", "4"):
            out = tmp_path / f"out{threads}"
            res = runner.invoke(main, [
                "augment", "--policy", "cifar10", "--input", str(image_dir),
                "--output", str(out), "--seed", "5", "--threads", threads,
            ])
            assert res.exit_code == 0, res.output
            outs.append(read_images(out))
        assert outs[0].keys() == outs[1].keys()
        for name in outs[0]:
            assert np.array_equal(outs[0][name], outs[1][name])

    def test_baseline_and_cutout_flags(self, runner, image_dir, tmp_path):
        out = tmp_path / "out"
        res = runner.invoke(main, [
            "augment", "--policy", "cifar10", "--input", str(image_dir),
            "--output", str(out), "--baseline", "cifar", "--cutout", "16",
        ])
        assert res.exit_code == 0, res.output

    def test_empty_input_fails(self, runner, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        res = runner.invoke(main, [
            "augment", "--policy", "cifar10", "--input", str(empty),
            "--output", str(tmp_path / "out"),
        ])
        assert res.exit_code != 0

    def test_bad_policy_file_reports_error(self, runner, image_dir, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("gibberish\n")
        res = runner.invoke(main, [
            "augment", "--policy", str(bad), "--input", str(image_dir),
            "--output", str(tmp_path / "out"),
        ])
        assert res.exit_code == 2
        assert "error:" in res.output


class TestSearch:
    def test_synth_search_writes_log_and_meta(self, runner, tmp_path):
        log_path = tmp_path / "log.jsonl"
        res = runner.invoke(main, [
            "search", "--algo", "random", "--dataset", "synth", "--budget", "6",
            "--seed", "0", "--out", str(log_path), "--train-size", "120",
            "--epochs", "1",
        ])
        assert res.exit_code == 0, res.output
        log = SearchLog.load(log_path)
        assert len(log.entries) == 6
        meta = json.loads((tmp_path / "log.jsonl.meta.json").read_text())
        assert meta["algorithm"] == "random"
        assert meta["elapsed_seconds"] > 0

    def test_cifar_binary_dataset(self, runner, tmp_path):
        rng = stream_rng(2)
        ds = LabeledDataset(
            rng.integers(0, 256, (60, 32, 32, 3)).astype(np.uint8),
            (np.arange(60) % 10).astype(np.int64), 10,
        )
        bin_path = tmp_path / "train.bin"
        save_cifar10_binary(ds, bin_path)
        log_path = tmp_path / "log.jsonl"
        res = runner.invoke(main, [
            "search", "--algo", "random", "--dataset", str(bin_path),
            "--budget", "3", "--out", str(log_path), "--epochs", "1",
        ])
        assert res.exit_code == 0, res.output
        assert len(SearchLog.load(log_path).entries) == 3

    def test_external_worker(self, runner, tmp_path):
        log_path = tmp_path / "log.jsonl"
        worker = f"{sys.executable} -m augsearch.echo_worker --mode invert-count"
        res = runner.invoke(main, [
            "search", "--algo", "random", "--dataset", "unused", "--budget", "5",
            "--out", str(log_path), "--worker", worker,
        ])
        assert res.exit_code == 0, res.output
        log = SearchLog.load(log_path)
        assert all(e.ok and 0.0 <= e.reward <= 1.0 for e in log.entries)

    def test_log_identical_across_thread_counts(self, runner, tmp_path):
        texts = []
        worker = f"{sys.executable} -m augsearch.echo_worker --mode invert-count"
        for threads in ("1", "4"):
            log_path = tmp_path / f"log{threads}.jsonl"
            res = runner.invoke(main, [
                "search", "--algo", "random", "--dataset", "unused",
                "--budget", "8", "--seed", "9", "--out", str(log_path),
                "--threads", threads, "--worker", worker,
            ])
            assert res.exit_code == 0, res.output
            texts.append(log_path.read_bytes())
        assert texts[0] == texts[1]


class TestPolicyCommands:
    def test_show_builtin(self, runner):
        res = runner.invoke(main, ["policy", "show", "cifar10"])
        assert res.exit_code == 0
        assert len(res.output.splitlines()) == 25
        parse_policy(res.output)

    def test_validate_ok(self, runner, tmp_path):
        f = tmp_path / "p.txt"
        f.write_text("(Invert,0.5,0)&(Rotate,0.5,3)\n")
        res = runner.invoke(main, ["policy", "validate", str(f)])
        assert res.exit_code == 0
        assert "ok: 1 sub-policies" in res.output

    def test_validate_bad(self, runner, tmp_path):
        f = tmp_path / "p.txt"
        f.write_text("(Invert,0.55,0)&(Rotate,0.5,3)\n")
        res = runner.invoke(main, ["policy", "validate", str(f)])
        assert res.exit_code == 2
        assert "error:" in res.output


class TestConcatAndAblate:
    def make_log(self, tmp_path):
        log_path = tmp_path / "log.jsonl"
        worker = f"{sys.executable} -m augsearch.echo_worker --mode invert-count"
        runner = CliRunner()
        res = runner.invoke(main, [
            "search", "--algo", "random", "--dataset", "unused", "--budget", "12",
            "--seed", "1", "--out", str(log_path), "--worker", worker,
        ])
        assert res.exit_code == 0, res.output
        return log_path

    def test_concat(self, runner, tmp_path):
        log_path = self.make_log(tmp_path)
        out = tmp_path / "best.txt"
        res = runner.invoke(main, ["concat", "--log", str(log_path), "--k", "2",
                                   "--out", str(out)])
        assert res.exit_code == 0, res.output
        p = parse_policy(out.read_text())
        assert len(p.sub_policies) == 10

    def test_ablate_randomize(self, runner, tmp_path):
        policy_file = tmp_path / "p.txt"
        policy_file.write_text("(Invert,1.0,0)&(Invert,0.0,0)\n" * 3)
        out = tmp_path / "report.json"
        res = runner.invoke(main, [
            "ablate", "--mode", "randomize", "--dataset", "synth",
            "--policy", str(policy_file), "--repeats", "2", "--train-size", "120",
            "--epochs", "1", "--out", str(out),
        ])
        assert res.exit_code == 0, res.output
        report = json.loads(out.read_text())
        assert "policy_reward" in report and len(report["randomized_rewards"]) == 2

    def test_ablate_subset_sweep(self, runner, tmp_path):
        log_path = self.make_log(tmp_path)
        out = tmp_path / "sweep.json"
        res = runner.invoke(main, [
            "ablate", "--mode", "subset-sweep", "--dataset", "synth",
            "--log", str(log_path), "--sizes", "1,3", "--repeats", "2",
            "--pool-size", "10", "--train-size", "120", "--epochs", "1",
            "--out", str(out),
        ])
        assert res.exit_code == 0, res.output
        report = json.loads(out.read_text())
        assert set(report["sizes"]) == {"1", "3"}

    def test_ablate_subset_sweep_requires_log(self, runner, tmp_path):
        res = runner.invoke(main, [
            "ablate", "--mode", "subset-sweep", "--dataset", "synth",
            "--train-size", "120", "--out", str(tmp_path / "x.json"),
        ])
        assert res.exit_code != 0


class TestGridAndBench:
    def test_grid(self, runner, image_dir, tmp_path):
        out = tmp_path / "grid.png"
        img = next(iter(sorted(image_dir.glob("*.png"))))
        res = runner.invoke(main, [
            "grid", "--policy", "cifar10", "--image", str(img), "--cols", "3",
            "--out", str(out),
        ])
        assert res.exit_code == 0, res.output
        raster = np.asarray(Image.open(out))
        assert raster.shape == (25 * 32, 3 * 32, 3)
        legend = (tmp_path / "grid.png.legend.txt").read_text()
        assert len(legend.splitlines()) == 25

    def test_bench(self, runner):
        res = runner.invoke(main, ["bench", "--policy", "cifar10", "--count", "40"])
        assert res.exit_code == 0, res.output
        report = json.loads(res.output)
        assert report["images_per_second"] > 0
        assert len(report["per_op_microseconds"]) == 16
