"""Single-task allocation experiment: batches of agents work towards a reward
requirement while state values and inter-agent distances are learned.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from stigmergy import core
from stigmergy.errors import ConfigError, EpisodeFailure, ExhaustionError
from stigmergy.kernel import KernelTable
from stigmergy.metrics import batch_utility
from stigmergy.rng import RunStreams


@dataclasses.dataclass(frozen=True)
class Experiment1Config:
    agent_count: int = 30
    requirement: float = 1100.0
    batch_size: int = 5
    reward_range: tuple = (1, 10)
    ability_range: tuple = (50, 120)
    cost_per_action: float = 10.0
    episodes: int = 500
    selection: core.SelectionParams = core.SelectionParams()
    update: core.UpdateParams = core.UpdateParams()
    distance_adjust: bool = True
    theta_init: float = 0.5
    d_init: float = 5.25
    d_min: float = 0.5
    d_max: float = 10.0
    d_th: float = 10.0
    eps_s: float = 0.01
    eps_phi: float = 0.01
    kernel: str = "diffusion"

    def __post_init__(self):
        if self.agent_count < 1:
            raise ConfigError("agent_count must be positive")
        if not 0 < self.batch_size <= self.agent_count:
            raise ConfigError("batch_size must lie in [1, agent_count]")
        if self.requirement < 0:
            raise ConfigError("requirement must be non-negative")
        if not self.cost_per_action > 0:
            raise ConfigError("cost_per_action must be positive")
        if self.episodes < 0:
            raise ConfigError("episodes must be non-negative")
        lo, hi = self.reward_range
        if not 0 <= lo <= hi:
            raise ConfigError("reward_range must be an ordered non-negative pair")
        lo, hi = self.ability_range
        if not 0 <= lo <= hi:
            raise ConfigError("ability_range must be an ordered non-negative pair")
        if not 0 <= self.theta_init <= 1:
            raise ConfigError("theta_init must lie in [0, 1]")
        if not self.d_min <= self.d_init <= self.d_max:
            raise ConfigError("d_init must lie in [d_min, d_max]")
        if self.kernel not in ("diffusion", "gaussian"):
            raise ConfigError("kernel must be 'diffusion' or 'gaussian'")


@dataclasses.dataclass(frozen=True)
class Turn:
    selected: tuple
    reward: float
    cost: float
    utility: float
    emergency: float
    accumulated: float


@dataclasses.dataclass
class EpisodeSummary:
    index: int
    status: str
    turns: int
    reward: float
    mean_utility: float


@dataclasses.dataclass
class LearningResult:
    pool: core.AgentPool
    distances: core.DistanceMatrix
    initial_distances: core.DistanceMatrix
    episodes: list
    final_log: list
    final_episode: int | None
    status: str
    initial_abilities: np.ndarray
    evaluation_log: list = dataclasses.field(default_factory=list)
    evaluation_status: str = "skipped"

    @property
    def completed(self):
        return sum(e.status == "completed" for e in self.episodes)

    def profile(self):
        """Per-agent ``(theta, reward, ability, average distance)`` arrays."""
        return (self.pool.theta.copy(), self.pool.rewards.copy(),
                self.pool.abilities.copy(), self.distances.average_outgoing())


def init_state(config: Experiment1Config, rng):
    """Random rewards and abilities; median state values and distances."""
    n = config.agent_count
    rewards = rng.integers(config.reward_range[0], config.reward_range[1], size=n,
                           endpoint=True)
    abilities = rng.integers(config.ability_range[0], config.ability_range[1], size=n,
                             endpoint=True)
    pool = core.AgentPool.create(rewards, abilities, theta_init=config.theta_init,
                                 eps_phi=config.eps_phi)
    dm = core.DistanceMatrix.uniform(n, config.d_init, config.d_min, config.d_max,
                                     config.d_th)
    return pool, dm


def min_turns(config: Experiment1Config) -> int:
    """Lower bound on turns to meet the requirement with top-reward batches."""
    best = config.batch_size * config.reward_range[1]
    return math.ceil(config.requirement / best) if best > 0 else 0


def run_episode(pool: core.AgentPool, dm: core.DistanceMatrix, kernel: KernelTable,
                config: Experiment1Config, rng):
    """Select batches until the accumulated reward meets the requirement.

    ``pool`` and ``dm`` are updated in place.  Returns the list of turns;
    raises :class:`EpisodeFailure` (carrying the partial log) when too few
    agents are left to form a batch.
    """
    log = []
    if config.requirement <= 0:
        return log
    board = core.TaskBoard(config.requirement, eps_s=config.eps_s)
    sel, upd = config.selection, config.update
    cost = config.batch_size * config.cost_per_action
    influence = core.influence_matrix(dm, kernel)
    neighbourhood = dm.neighbourhood()
    while not board.done:
        weights = core.selection_weight(board.emergency, pool.theta, pool.heuristic, sel)
        try:
            batch = core.sample_batch(weights, config.batch_size, pool.eligible, rng)
        except ExhaustionError as exc:
            raise EpisodeFailure(str(exc), log) from exc
        pool.abilities[batch] -= 1
        batch_rewards = pool.rewards[batch]
        core.update_task_stimulus(board, batch_rewards)

        local = core.local_deltas(batch, pool.rewards, upd.rho1, upd.clamp_local)
        pool.theta = core.apply_delta(pool.theta, local)
        spread = core.propagated_deltas(local, dm, kernel, upd.rho2, upd.clamp_prop,
                                        influence=influence)
        pool.theta = core.apply_delta(pool.theta, spread)
        if config.distance_adjust:
            core.regulate_turn(batch, local, local + spread, dm, upd.factor,
                               neighbourhood=neighbourhood)
            influence = core.influence_matrix(dm, kernel)
            neighbourhood = dm.neighbourhood()

        reward = float(batch_rewards.sum())
        log.append(Turn(selected=tuple(int(b) for b in batch), reward=reward, cost=cost,
                        utility=batch_utility(reward, cost), emergency=board.emergency,
                        accumulated=board.accumulated))
    return log


def run_learning(config: Experiment1Config, kernel: KernelTable, seed=0,
                 streams: RunStreams | None = None, evaluate=True) -> LearningResult:
    """Repeat the task ``config.episodes`` times with shared states and distances.

    Abilities are drawn once and never restored, so late episodes run on
    depleted agents.  A failed episode is recorded and the run moves on; the
    run stops once fewer than ``batch_size`` agents can still act.

    With ``evaluate`` set, one more episode is run on copies of the learned
    state with abilities restored to their initial draw (see
    :func:`evaluation_episode`).
    """
    streams = streams or RunStreams(seed)
    pool, dm = init_state(config, streams.init)
    initial = dm.copy()
    initial_abilities = pool.abilities.copy()
    rng = streams.sampling
    summaries, final_log, final_idx = [], [], None
    status = "completed"
    for ep in range(config.episodes):
        if np.count_nonzero(pool.eligible) < config.batch_size:
            status = "exhausted"
            break
        try:
            log = run_episode(pool, dm, kernel, config, rng)
        except EpisodeFailure as exc:
            summaries.append(_summarise(ep, "failed", exc.log))
            continue
        summaries.append(_summarise(ep, "completed", log))
        final_log, final_idx = log, ep
    result = LearningResult(pool=pool, distances=dm, initial_distances=initial,
                            episodes=summaries, final_log=final_log, final_episode=final_idx,
                            status=status, initial_abilities=initial_abilities)
    if evaluate:
        evaluation_episode(result, kernel, config, streams.evaluation)
    return result


def evaluation_episode(result: LearningResult, kernel: KernelTable,
                       config: Experiment1Config, rng):
    """Run the task once with the learned states and distances on fresh agents.

    The learned pool and matrix are left untouched.  This is the episode
    whose per-turn utility is compared across schemes.
    """
    pool = result.pool.copy()
    pool.abilities = result.initial_abilities.copy()
    dm = result.distances.copy()
    try:
        result.evaluation_log = run_episode(pool, dm, kernel, config, rng)
        result.evaluation_status = "completed"
    except EpisodeFailure as exc:
        result.evaluation_log = exc.log
        result.evaluation_status = "failed"
    return result.evaluation_log


def _summarise(index, status, log):
    reward = sum(t.reward for t in log)
    mean_u = float(np.mean([t.utility for t in log])) if log else 0.0
    return EpisodeSummary(index=index, status=status, turns=len(log), reward=reward,
                          mean_utility=mean_u)

