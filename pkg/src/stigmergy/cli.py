"""Command-line entry point.

    stigmergy kernel     [--config PATH] [--out-dir DIR]
    stigmergy task-alloc [--config PATH] [--seed N] [--seeds N] [--baseline] [--out-dir DIR]
    stigmergy pattern    [--config PATH] [--seed N] [--snapshot-every K] [--out-dir DIR]

Every run writes ``manifest.json`` into its output directory, whether it
succeeds or not.  Results are computed in full before any output file is
written, so a failed run leaves only the manifest behind.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import datetime
import json
import os
import sys
from pathlib import Path

import numpy as np

from stigmergy import __version__
from stigmergy.config import RunConfig, load_config
from stigmergy.errors import ConfigError, StigmergyError
from stigmergy.io import write_csv, write_kernel_csv, write_pgm
from stigmergy.metrics import spearman_rank
from stigmergy.pattern import run_pattern
from stigmergy.task_allocation import run_learning

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
SEED_ENV = "STIGMERGY_SEED"


class _Parser(argparse.ArgumentParser):
    # usage errors are config errors, not argparse's default exit 2
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    parser = _Parser(prog="stigmergy", description="Brain-inspired stigmergy learning simulator")
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="default",
                        help="YAML config file, or 'default' for the shipped values")
    common.add_argument("--seed", default="0", help=f"root seed (u64); {SEED_ENV} overrides")
    common.add_argument("--out-dir", default=".", type=Path)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("kernel", parents=[common], help="tabulate diffusion and Gaussian kernels")

    ta = sub.add_parser("task-alloc", parents=[common], help="task-allocation experiment")
    ta.add_argument("--baseline", action="store_true", help="disable distance regulation")
    ta.add_argument("--seeds", type=int, default=None, help="sweep N consecutive seeds")
    ta.add_argument("--jobs", type=int, default=None, help="worker processes for sweeps")

    pt = sub.add_parser("pattern", parents=[common], help="pattern-convergence experiment")
    pt.add_argument("--snapshot-every", type=int, default=None,
                    help="write a frame every K iterations (0 disables frames)")
    return parser


def parse_seed(text):
    try:
        seed = int(str(text).strip())
    except ValueError as exc:
        raise ConfigError(f"seed must be an integer, got {text!r}") from exc
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return seed


def _timestamp():
    # SOURCE_DATE_EPOCH pins timestamps for reproducible output trees
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = (datetime.datetime.fromtimestamp(int(epoch), datetime.timezone.utc) if epoch
           else datetime.datetime.now(datetime.timezone.utc))
    return now.isoformat(timespec="seconds")


class Manifest:
    def __init__(self, command, out_dir):
        self.out_dir = Path(out_dir)
        self.data = {"artifact_version": __version__, "subcommand": command, "seed": None,
                     "config_digest": None, "started": _timestamp(), "finished": None,
                     "status": "running", "error": None, "outputs": []}

    def record(self, path):
        self.data["outputs"].append(Path(path).relative_to(self.out_dir).as_posix())

    def write(self, status, error=None):
        self.data.update(status=status, error=error, finished=_timestamp())
        self.data["outputs"].sort()
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / "manifest.json"
        path.write_text(json.dumps(self.data, indent=2) + "\n")
        return path


# -- kernel ------------------------------------------------------------------

def cmd_kernel(cfg: RunConfig, args, manifest):
    diffusion = cfg.kernel.diffusion()
    gaussian = cfg.kernel.gaussian()
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    manifest.record(write_kernel_csv(out / "kernel_diffusion.csv", diffusion))
    manifest.record(write_kernel_csv(out / "kernel_gaussian.csv", gaussian))
    _write_config(cfg, out, manifest)


# -- task allocation ---------------------------------------------------------

def _task_run(cfg: RunConfig, seed):
    """One learning run plus its evaluation episode, reduced to plain data."""
    kernel = cfg.kernel.build(cfg.experiment1.kernel)
    res = run_learning(cfg.experiment1, kernel, seed=seed)
    theta, rewards, abilities, avg_d = res.profile()
    try:
        rho = spearman_rank(theta, avg_d)
    except ValueError:
        rho = None
    turns = [(i, " ".join(map(str, t.selected)), t.reward, t.cost, t.utility, t.emergency,
              t.accumulated) for i, t in enumerate(res.evaluation_log)]
    agents = [(i, float(theta[i]), int(rewards[i]), int(abilities[i]), float(avg_d[i]))
              for i in range(len(theta))]
    episodes = [(e.index, e.status, e.turns, e.reward, e.mean_utility) for e in res.episodes]
    utils = [t.utility for t in res.evaluation_log]
    summary = {
        "seed": seed,
        "status": res.status,
        "episodes_run": len(res.episodes),
        "episodes_completed": res.completed,
        "evaluation_status": res.evaluation_status,
        "evaluation_turns": len(res.evaluation_log),
        "evaluation_mean_utility_first10": float(np.mean(utils[:10])) if utils else None,
        "spearman_theta_distance": rho,
    }
    return summary, turns, agents, episodes


def _write_task_run(out: Path, result, manifest):
    summary, turns, agents, episodes = result
    out.mkdir(parents=True, exist_ok=True)
    manifest.record(write_csv(out / "turns.csv", ("turn", "selected", "reward", "cost",
                                                   "utility", "emergency", "accumulated"), turns))
    manifest.record(write_csv(out / "agents.csv", ("agent_id", "theta", "reward", "ability",
                                                    "avg_distance"), agents))
    manifest.record(write_csv(out / "episodes.csv", ("episode", "status", "turns", "reward",
                                                      "mean_utility"), episodes))


def cmd_task_alloc(cfg: RunConfig, args, manifest, seed):
    if args.baseline:
        cfg = cfg.replace("experiment1", distance_adjust=False)
    n_seeds = args.seeds if args.seeds is not None else cfg.output.seeds
    jobs = args.jobs if args.jobs is not None else cfg.output.jobs
    if n_seeds < 1 or jobs < 1:
        raise ConfigError("--seeds and --jobs must be at least 1")
    seeds = [(seed + k) % 2 ** 64 for k in range(n_seeds)]
    if jobs > 1 and n_seeds > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_task_run, [cfg] * n_seeds, seeds))
    else:
        results = [_task_run(cfg, s) for s in seeds]

    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    if n_seeds == 1:
        _write_task_run(out, results[0], manifest)
    else:
        for s, r in zip(seeds, results):
            _write_task_run(out / f"seed_{s}", r, manifest)
    runs = [r[0] for r in results]
    rhos = [r["spearman_theta_distance"] for r in runs if r["spearman_theta_distance"] is not None]
    summary = {
        "distance_adjust": cfg.experiment1.distance_adjust,
        "seeds": seeds,
        "runs": runs,
        "fraction_spearman_above_0.5": (sum(r > 0.5 for r in rhos) / len(runs)),
        "median_evaluation_turns": float(np.median([r["evaluation_turns"] for r in runs])),
    }
    path = out / "summary.json"
    path.write_text(json.dumps(summary, indent=2) + "\n")
    manifest.record(path)
    _write_config(cfg, out, manifest)


# -- pattern -----------------------------------------------------------------

def cmd_pattern(cfg: RunConfig, args, manifest, seed):
    if args.snapshot_every is not None:
        cfg = cfg.replace("experiment2", snapshot_every=args.snapshot_every)
    pc = cfg.experiment2
    kernel = cfg.kernel.build(pc.kernel)
    run = run_pattern(pc, kernel, seed=seed)

    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    rows = zip(range(len(run)), run.target_index, run.similarity, run.d_bar, run.feedback)
    manifest.record(write_csv(out / "pattern_trace.csv",
                              ("iteration", "target", "similarity", "d_bar", "feedback"), rows))
    if run.frames:
        frames = out / "frames"
        frames.mkdir(exist_ok=True)
        width = len(str(max(pc.iterations - 1, 0)))
        for it, grid in sorted(run.frames.items()):
            manifest.record(write_pgm(frames / f"frame_{it:0{width}d}.pgm", grid))
    _write_config(cfg, out, manifest)


def _write_config(cfg: RunConfig, out: Path, manifest):
    path = out / "config.yaml"
    path.write_text(cfg.dump())
    manifest.record(path)


COMMANDS = {"kernel": cmd_kernel, "task-alloc": cmd_task_alloc, "pattern": cmd_pattern}


def run_cli(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"stigmergy: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    manifest = Manifest(args.command, args.out_dir)
    try:
        seed = parse_seed(os.environ.get(SEED_ENV, args.seed))
        manifest.data["seed"] = seed
        cfg = load_config(args.config)
        manifest.data["config_digest"] = cfg.digest
        if args.command == "kernel":
            cmd_kernel(cfg, args, manifest)
        else:
            COMMANDS[args.command](cfg, args, manifest, seed)
    except ConfigError as exc:
        manifest.write("config_error", str(exc))
        print(f"stigmergy: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StigmergyError, ArithmeticError, ValueError, OSError) as exc:
        manifest.write("runtime_error", f"{type(exc).__name__}: {exc}")
        print(f"stigmergy: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    manifest.write("ok")
    return EXIT_OK


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
