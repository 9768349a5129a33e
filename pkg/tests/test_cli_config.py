import json

import numpy as np
import pytest

from stigmergy.cli import run_cli
from stigmergy.config import RunConfig, load_config, parse_config
from stigmergy.errors import ConfigError

SMALL = """\
experiment1:
  episodes: 3
experiment2:
  iterations: 120
  switch_iteration: 60
  snapshot_every: 50
"""


def tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.yaml"
    path.write_text(SMALL)
    return path


@pytest.fixture(autouse=True)
def pinned_clock(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    monkeypatch.delenv("STIGMERGY_SEED", raising=False)


# -- config -------------------------------------------------------------------------------

def test_default_config_complete():
    cfg = load_config("default")
    assert cfg == RunConfig() == parse_config("")
    assert set(cfg.to_dict()) == {"kernel", "experiment1", "experiment2", "output"}


def test_config_round_trip():
    cfg = parse_config(SMALL)
    again = parse_config(cfg.dump())
    assert again == cfg and again.digest == cfg.digest
    assert cfg.digest != RunConfig().digest


@pytest.mark.parametrize("text", [
    "kernel: {bogus: 1}",
    "experiment1: {selection: {gamma: 1}}",
    "experiment2: {iterations: ten}",
    "experiment1: {distance_adjust: 1}",
    "experiment1: {reward_range: [1, 2, 3]}",
    "experiment2: {targets: [4]}",
    "kernel: {telegraph: {dt: 5.0}}",
    "kernel: {d_th: 8.0}",
    "- just\n- a list",
    "kernel: {glu: [",
])
def test_bad_configs_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "none.yaml")


# -- kernel subcommand ------------------------------------------------------------------------

def test_kernel_command(tmp_path):
    out = tmp_path / "k"
    assert run_cli(["kernel", "--config", "default", "--out-dir", str(out)]) == 0
    files = sorted(p.name for p in out.iterdir())
    assert files == ["config.yaml", "kernel_diffusion.csv", "kernel_gaussian.csv",
                     "manifest.json"]
    for name in ("kernel_diffusion.csv", "kernel_gaussian.csv"):
        rows = np.loadtxt(out / name, delimiter=",", skiprows=1)
        assert rows[0].tolist() == [0.0, 1.0]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert manifest["config_digest"] == RunConfig().digest
    assert manifest["outputs"] == ["config.yaml", "kernel_diffusion.csv", "kernel_gaussian.csv"]


def test_missing_config_exit_1_manifest_only(tmp_path):
    out = tmp_path / "bad"
    assert run_cli(["kernel", "--config", str(tmp_path / "nope.yaml"), "--out-dir", str(out)]) == 1
    assert [p.name for p in out.iterdir()] == ["manifest.json"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "config_error" and manifest["error"]


def test_usage_error_exit_1(tmp_path):
    assert run_cli(["pattern", "--no-such-flag"]) == 1
    assert run_cli(["task-alloc", "--seed", "-4", "--out-dir", str(tmp_path)]) == 1


def test_runtime_error_exit_2(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("kernel: {regulation: {i_th: 500.0}}\n")
    out = tmp_path / "o"
    assert run_cli(["kernel", "--config", str(cfg), "--out-dir", str(out)]) == 2
    assert [p.name for p in out.iterdir()] == ["manifest.json"]
    assert json.loads((out / "manifest.json").read_text())["status"] == "runtime_error"


# -- task allocation --------------------------------------------------------------------------

def test_task_alloc_outputs(tmp_path, small_config):
    out = tmp_path / "t"
    assert run_cli(["task-alloc", "--config", str(small_config), "--seed", "1",
                    "--out-dir", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == [
        "agents.csv", "config.yaml", "episodes.csv", "manifest.json", "summary.json", "turns.csv"]
    header = (out / "agents.csv").read_text().splitlines()[0]
    assert header == "agent_id,theta,reward,ability,avg_distance"
    summary = json.loads((out / "summary.json").read_text())
    assert summary["seeds"] == [1] and summary["distance_adjust"] is True


def test_task_alloc_deterministic(tmp_path, small_config):
    for name in ("a", "b"):
        assert run_cli(["task-alloc", "--config", str(small_config), "--seed", "1",
                        "--out-dir", str(tmp_path / name)]) == 0
    assert tree(tmp_path / "a") == tree(tmp_path / "b")


def test_seed_env_override(tmp_path, small_config, monkeypatch):
    monkeypatch.setenv("STIGMERGY_SEED", "5")
    assert run_cli(["task-alloc", "--config", str(small_config), "--seed", "1",
                    "--out-dir", str(tmp_path / "env")]) == 0
    monkeypatch.delenv("STIGMERGY_SEED")
    assert run_cli(["task-alloc", "--config", str(small_config), "--seed", "5",
                    "--out-dir", str(tmp_path / "flag")]) == 0
    assert tree(tmp_path / "env") == tree(tmp_path / "flag")


def test_baseline_and_sweep(tmp_path, small_config):
    out = tmp_path / "s"
    assert run_cli(["task-alloc", "--config", str(small_config), "--baseline", "--seeds", "3",
                    "--seed", "10", "--out-dir", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["seeds"] == [10, 11, 12] and summary["distance_adjust"] is False
    for s in (10, 11, 12):
        assert (out / f"seed_{s}" / "turns.csv").exists()


def test_sweep_jobs_do_not_change_results(tmp_path, small_config):
    args = ["task-alloc", "--config", str(small_config), "--seeds", "2"]
    assert run_cli(args + ["--jobs", "1", "--out-dir", str(tmp_path / "j1")]) == 0
    assert run_cli(args + ["--jobs", "2", "--out-dir", str(tmp_path / "j2")]) == 0
    assert tree(tmp_path / "j1") == tree(tmp_path / "j2")


# -- pattern ----------------------------------------------------------------------------------

def test_pattern_outputs(tmp_path, small_config):
    out = tmp_path / "p"
    assert run_cli(["pattern", "--config", str(small_config), "--snapshot-every", "40",
                    "--out-dir", str(out)]) == 0
    frames = sorted(p.name for p in (out / "frames").iterdir())
    assert frames == ["frame_000.pgm", "frame_040.pgm", "frame_080.pgm", "frame_119.pgm"]
    rows = (out / "pattern_trace.csv").read_text().splitlines()
    assert rows[0] == "iteration,target,similarity,d_bar,feedback"
    assert len(rows) == 121
    manifest = json.loads((out / "manifest.json").read_text())
    listed = set(manifest["outputs"]) | {"manifest.json"}
    assert listed == set(tree(out))


def test_effective_config_reproduces_run(tmp_path, small_config):
    first = tmp_path / "first"
    assert run_cli(["pattern", "--config", str(small_config), "--out-dir", str(first)]) == 0
    second = tmp_path / "second"
    assert run_cli(["pattern", "--config", str(first / "config.yaml"),
                    "--out-dir", str(second)]) == 0
    assert tree(first) == tree(second)
