"""Pattern experiment: 784 agents on a 28x28 grid learn a binary target
purely by regulating directed distances between random groups.

Every agent receives a unit input each iteration; its state is the Heaviside
of the kernel-weighted input from all other agents minus ``base``.  Groups
are scored against the target, and the distances between two consecutive
groups are pushed apart or together depending on which scored higher.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from stigmergy.core import DistanceMatrix
from stigmergy.errors import ConfigError
from stigmergy.io import GRID, load_target
from stigmergy.kernel import KernelTable, kernel_eval
from stigmergy.metrics import similarity

N_AGENTS = GRID[0] * GRID[1]
KERNELS = ("diffusion", "gaussian")

# reward[state, pixel]
REWARD = np.array([[0, 1],
                   [-1, 0]], dtype=np.int64)


@dataclasses.dataclass(frozen=True)
class PatternConfig:
    group_size: int = 120
    base: float | None = None
    unit_input: float = 1.0
    factor: float = 0.05
    iterations: int = 40000
    switch_iteration: int = 20000
    targets: tuple = ("4", "8")
    d_init: float = 5.25
    d_min: float = 0.5
    d_max: float = 10.0
    d_th: float = 10.0
    snapshot_every: int = 2000
    kernel: str = "diffusion"

    def __post_init__(self):
        if not 0 < self.group_size <= N_AGENTS:
            raise ConfigError(f"group_size must lie in [1, {N_AGENTS}]")
        if self.base is not None and not self.base > 0:
            raise ConfigError("base must be positive")
        if not self.factor > 0:
            raise ConfigError("factor must be positive")
        if self.iterations < 0:
            raise ConfigError("iterations must be non-negative")
        if not 0 <= self.switch_iteration:
            raise ConfigError("switch_iteration must be non-negative")
        if len(self.targets) not in (1, 2):
            raise ConfigError("targets holds one or two patterns")
        if not self.d_min <= self.d_init <= self.d_max:
            raise ConfigError("d_init must lie in [d_min, d_max]")
        if self.snapshot_every < 0:
            raise ConfigError("snapshot_every must be non-negative")
        if self.kernel not in KERNELS:
            raise ConfigError(f"kernel must be one of {KERNELS}")


@dataclasses.dataclass
class PatternRun:
    similarity: list = dataclasses.field(default_factory=list)
    d_bar: list = dataclasses.field(default_factory=list)
    feedback: list = dataclasses.field(default_factory=list)
    target_index: list = dataclasses.field(default_factory=list)
    frames: dict = dataclasses.field(default_factory=dict)
    base: float = 0.0
    distances: DistanceMatrix | None = None

    def __len__(self):
        return len(self.similarity)


def validate_target(target):
    target = np.asarray(target)
    if target.shape != GRID:
        raise ConfigError(f"target must be {GRID[0]}x{GRID[1]}")
    if set(np.unique(target).tolist()) != {0, 1}:
        raise ConfigError("target must contain both 0 and 1 pixels")
    return target.astype(np.int8)


def default_base(kernel: KernelTable, d_init, n=N_AGENTS, unit_input=1.0):
    """Base that puts the uniform starting matrix exactly at the threshold."""
    return (n - 1) * unit_input * kernel_eval(kernel, d_init)


def influence(dm: DistanceMatrix, kernel: KernelTable):
    """``K[i, j] = D(d[i, j])`` with no self-feedback."""
    K = kernel_eval(kernel, dm.d)
    np.fill_diagonal(K, 0.0)
    return K


def activation_threshold(base):
    # ties within rounding of base count as Theta(0) = 0
    return base + 1e-9 * abs(base)


def agent_states(drive, base):
    return (np.asarray(drive) > activation_threshold(base)).astype(np.int8)


def agent_output(j, inputs, dm: DistanceMatrix, kernel: KernelTable, base) -> int:
    """State of agent ``j`` from the weighted input of all other agents."""
    d = dm.d[:, j]
    w = kernel_eval(kernel, d)
    w[j] = 0.0
    drive = float(np.dot(np.asarray(inputs, dtype=float), w))
    return int(drive > activation_threshold(base))


def group_feedback(group, states, target) -> int:
    """Summed reward of a group's states against the target pixels."""
    group = np.asarray(group, dtype=np.int64)
    s = np.asarray(states).reshape(-1)[group].astype(np.int64)
    p = np.asarray(target).reshape(-1)[group].astype(np.int64)
    return int(REWARD[s, p].sum())


def split_groups(group_prev, feedback_prev, group_curr, feedback_curr, n=N_AGENTS):
    """Higher- and lower-feedback groups with their overlap removed.

    Returns ``(None, None)`` on a feedback tie.
    """
    if feedback_prev == feedback_curr:
        return None, None
    if feedback_prev > feedback_curr:
        high, low = group_prev, group_curr
    else:
        high, low = group_curr, group_prev
    in_high = np.zeros(n, dtype=bool)
    in_low = np.zeros(n, dtype=bool)
    in_high[np.asarray(high, dtype=np.int64)] = True
    in_low[np.asarray(low, dtype=np.int64)] = True
    return np.flatnonzero(in_high & ~in_low), np.flatnonzero(in_low & ~in_high)


def regulate_group_distances(group_prev, feedback_prev, group_curr, feedback_curr,
                             dm: DistanceMatrix, factor) -> DistanceMatrix:
    """Lengthen higher->lower distances and shorten lower->higher ones."""
    high, low = split_groups(group_prev, feedback_prev, group_curr, feedback_curr, dm.n)
    if high is not None and len(high) and len(low):
        _shift(dm, high, low, factor)
    return dm


def _shift(dm: DistanceMatrix, high, low, factor):
    hl = np.ix_(high, low)
    lh = np.ix_(low, high)
    dm.d[hl] = np.minimum(dm.d[hl] + factor, dm.d_max)
    dm.d[lh] = np.maximum(dm.d[lh] - factor, dm.d_min)
    return hl, lh


def excitatory_distance(dm: DistanceMatrix, target):
    """Mean distance from all others to the agents the target wants excited."""
    on = np.flatnonzero(np.asarray(target).reshape(-1))
    n = dm.n
    cols = dm.d[:, on]
    return float((cols.sum() - dm.d[on, on].sum()) / (len(on) * (n - 1)))


def load_targets(config: PatternConfig):
    return [validate_target(load_target(t)) for t in config.targets]


def run_pattern(config: PatternConfig, kernel: KernelTable, seed=0, targets=None,
                rng=None, distances: DistanceMatrix | None = None) -> PatternRun:
    """Iterate group selection, state evaluation and distance regulation.

    The first target is active for iterations ``< switch_iteration`` and the
    second from there on.  Frames are kept every ``snapshot_every``
    iterations (and at the last one) when that interval is positive.
    """
    if abs(kernel.d_th - config.d_th) > 1e-12:
        raise ConfigError("kernel support does not match d_th")
    targets = load_targets(config) if targets is None else [validate_target(t) for t in targets]
    rng = np.random.default_rng(seed) if rng is None else rng
    dm = distances if distances is not None else DistanceMatrix.uniform(
        N_AGENTS, config.d_init, config.d_min, config.d_max, config.d_th)
    base = config.base if config.base is not None else default_base(
        kernel, config.d_init, unit_input=config.unit_input)
    K = influence(dm, kernel)
    run = PatternRun(base=base)

    # incoming distance totals per agent, for the d-bar trace
    incoming = dm.d.sum(axis=0) - np.diag(dm.d)
    on = [np.flatnonzero(t.reshape(-1)) for t in targets]

    prev_group = prev_fb = None
    prev_target = None
    for it in range(config.iterations):
        t_idx = 0 if (it < config.switch_iteration or len(targets) == 1) else 1
        target = targets[t_idx]
        if t_idx != prev_target:
            # feedback against the old target is not comparable
            prev_group = prev_fb = None
            prev_target = t_idx
        group = np.sort(rng.choice(N_AGENTS, size=config.group_size, replace=False))
        states = agent_states(K.sum(axis=0) * config.unit_input, base)
        fb = group_feedback(group, states, target)
        if prev_group is not None:
            high, low = split_groups(prev_group, prev_fb, group, fb)
            if high is not None and len(high) and len(low):
                incoming[low] -= dm.d[np.ix_(high, low)].sum(axis=0)
                incoming[high] -= dm.d[np.ix_(low, high)].sum(axis=0)
                for block in _shift(dm, high, low, config.factor):
                    sub = dm.d[block]
                    K[block] = kernel_eval(kernel, sub)
                    incoming[block[1].ravel()] += sub.sum(axis=0)
        prev_group, prev_fb = group, fb

        grid = states.reshape(GRID)
        run.similarity.append(similarity(grid, target))
        run.d_bar.append(float(incoming[on[t_idx]].sum() / (len(on[t_idx]) * (N_AGENTS - 1))))
        run.feedback.append(fb)
        run.target_index.append(t_idx)
        last = it == config.iterations - 1
        if config.snapshot_every and (it % config.snapshot_every == 0 or last):
            run.frames[it] = grid.copy()
    run.distances = dm
    return run
