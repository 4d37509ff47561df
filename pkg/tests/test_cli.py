import json

import pytest
from click.testing import CliRunner

from trajvid.bundle import write_bundle
from trajvid.cli import main
from trajvid.synth import read_dataset


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture(scope="module")
def pipeline(workdir):
    """Tiny full pipeline driven through the CLI; shared by the tests below."""
    runner = CliRunner()
    spec = _write(workdir / "data.json",
                  {"num_samples": 6, "num_objects": [1, 2], "seed": 500})
    r = runner.invoke(main, ["data", "gen", "--spec", spec,
                             "--out", str(workdir / "data")])
    assert r.exit_code == 0, r.output

    bench = _write(workdir / "bench.json", {"groups": {"1": 2, "2": 2},
                                            "base_seed": 9})
    r = runner.invoke(main, ["bench", "build", "--config", bench,
                             "--out", str(workdir / "bench")])
    assert r.exit_code == 0, r.output

    run = workdir / "run"
    s0 = _write(workdir / "s0.json", {"stage": 0, "steps": 4, "seed": 0,
                                      "model": {"num_blocks": 2, "hidden_dim": 32,
                                                "num_heads": 2}})
    r = runner.invoke(main, ["train", "stage0", "--config", s0,
                             "--data", str(workdir / "data"), "--out", str(run)])
    assert r.exit_code == 0, r.output

    s1 = _write(workdir / "s1.json", {"stage": 1, "steps": 4, "seed": 1})
    r = runner.invoke(main, ["train", "stage1", "--config", s1,
                             "--data", str(workdir / "data"),
                             "--teacher", str(run / "teacher.ckpt"),
                             "--out", str(run)])
    assert r.exit_code == 0, r.output

    s2 = _write(workdir / "s2.json", {"stage": 2, "steps": 6, "seed": 2})
    r = runner.invoke(main, ["train", "stage2", "--config", s2,
                             "--data", str(workdir / "data"),
                             "--teacher", str(run / "teacher.ckpt"),
                             "--out", str(run)])
    assert r.exit_code == 0, r.output

    s3 = _write(workdir / "s3.json", {"stage": 3, "steps": 6, "seed": 3})
    r = runner.invoke(main, ["train", "stage3", "--config", s3,
                             "--data", str(workdir / "data"),
                             "--student", str(run / "student.ckpt"),
                             "--slow-adapter", str(run / "slow_adapter.ckpt"),
                             "--out", str(run)])
    assert r.exit_code == 0, r.output
    return workdir


def test_data_gen_output(pipeline):
    samples, _ = read_dataset(pipeline / "data")
    assert len(samples) == 6
    assert [s.num_objects for s in samples] == [1, 2, 1, 2, 1, 2]


def test_bench_build_output(pipeline):
    samples, groups = read_dataset(pipeline / "bench")
    assert sorted(groups) == [1, 1, 2, 2]


def test_training_artifacts(pipeline):
    run = pipeline / "run"
    for name in ("teacher.ckpt", "slow_adapter.ckpt", "student.ckpt",
                 "fast_adapter.ckpt", "discriminator.ckpt"):
        assert (run / name).exists(), name
    for name in ("stage0_log.jsonl", "stage1_log.jsonl",
                 "stage2_log.jsonl", "stage3_log.jsonl"):
        lines = (run / name).read_text().splitlines()
        assert lines and all(json.loads(l) for l in lines)


def test_bench_run_report(pipeline):
    run = pipeline / "run"
    write_bundle(run, "student.ckpt", adapter="fast_adapter.ckpt")
    runner = CliRunner()
    out = pipeline / "report.json"
    r = runner.invoke(main, ["bench", "run", "--bundle", str(run),
                             "--set", str(pipeline / "bench"),
                             "--steps", "2", "--out", str(out)])
    assert r.exit_code == 0, r.output
    report = json.loads(out.read_text())
    assert [row["object_count"] for row in report["rows"]] == [1, 2]
    assert out.with_suffix(".md").exists()


def test_stage3_slow_adapter_only_ablation(pipeline):
    run = pipeline / "run"
    out = pipeline / "ablate"
    runner = CliRunner()
    r = runner.invoke(main, ["train", "stage3", "--data", str(pipeline / "data"),
                             "--student", str(run / "student.ckpt"),
                             "--slow-adapter", str(run / "slow_adapter.ckpt"),
                             "--ablate", "slow-adapter-only", "--out", str(out)])
    assert r.exit_code == 0, r.output
    assert (out / "fast_adapter.ckpt").read_bytes() == \
        (run / "slow_adapter.ckpt").read_bytes()


def test_stage_mismatch_rejected(pipeline):
    runner = CliRunner()
    bad = _write(pipeline / "bad.json", {"stage": 2, "steps": 4})
    r = runner.invoke(main, ["train", "stage0", "--config", bad,
                             "--data", str(pipeline / "data"),
                             "--out", str(pipeline / "x")])
    assert r.exit_code != 0


def test_help_lists_commands():
    runner = CliRunner()
    r = runner.invoke(main, ["--help"])
    assert r.exit_code == 0
    for cmd in ("data", "bench", "train", "serve"):
        assert cmd in r.output
