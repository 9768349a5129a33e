"""Agent, task and distance state for the stigmergy learning model.

Selection weights, batch sampling, task stimulus accounting, local and
propagated state updates, and correlation-driven distance regulation.
All arrays are indexed by agent id; a single task is tracked at a time.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from stigmergy.errors import ConfigError, ExhaustionError
from stigmergy.kernel import KernelTable, kernel_eval

ADDITIVE = "additive"
MULTIPLICATIVE = "multiplicative"


@dataclasses.dataclass(frozen=True)
class SelectionParams:
    alpha: float = 2.0
    beta: float = 2.0
    n_sel: float = 2.0
    mode: str = MULTIPLICATIVE

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ConfigError("alpha and beta must be positive")
        if self.n_sel < 1:
            raise ConfigError("n_sel must be >= 1")
        if self.mode not in (ADDITIVE, MULTIPLICATIVE):
            raise ConfigError(f"unknown selection mode {self.mode!r}")


@dataclasses.dataclass(frozen=True)
class UpdateParams:
    rho1: float = 0.001
    rho2: float = 1.0
    factor: float = 0.5
    clamp_local: float = 0.01
    clamp_prop: float = 0.01

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if not getattr(self, f.name) > 0:
                raise ConfigError(f"{f.name} must be positive")


@dataclasses.dataclass
class AgentPool:
    """Per-agent reward, remaining ability and state value for one task."""

    rewards: np.ndarray
    abilities: np.ndarray
    theta: np.ndarray
    ability_scale: float
    eps_phi: float = 0.01

    def __post_init__(self):
        self.rewards = np.asarray(self.rewards, dtype=float)
        self.abilities = np.asarray(self.abilities, dtype=np.int64)
        self.theta = np.asarray(self.theta, dtype=float)
        n = len(self.rewards)
        if self.abilities.shape != (n,) or self.theta.shape != (n,):
            raise ConfigError("rewards, abilities and theta must have equal length")
        if np.any(self.abilities < 0):
            raise ConfigError("abilities must be non-negative")
        if not self.ability_scale > 0:
            raise ConfigError("ability_scale must be positive")
        if not 0 < self.eps_phi <= 1:
            raise ConfigError("eps_phi must lie in (0, 1]")
        self.theta = np.clip(self.theta, 0.0, 1.0)

    @classmethod
    def create(cls, rewards, abilities, theta_init=0.5, eps_phi=0.01):
        abilities = np.asarray(abilities, dtype=np.int64)
        scale = float(abilities.max()) if abilities.size and abilities.max() > 0 else 1.0
        return cls(rewards=rewards, abilities=abilities.copy(),
                   theta=np.full(len(abilities), float(theta_init)),
                   ability_scale=scale, eps_phi=eps_phi)

    def __len__(self):
        return len(self.rewards)

    @property
    def heuristic(self):
        """Heuristic factor: fraction of ability spent, floored at ``eps_phi``."""
        return np.maximum(1.0 - self.abilities / self.ability_scale, self.eps_phi)

    @property
    def eligible(self):
        return self.abilities > 0

    def copy(self):
        return dataclasses.replace(self, rewards=self.rewards.copy(),
                                   abilities=self.abilities.copy(),
                                   theta=self.theta.copy())


@dataclasses.dataclass
class DistanceMatrix:
    """Directed inter-synapse distances ``d[k, i]`` from agent k to agent i.

    The diagonal is unused and held at ``d_max``.
    """

    d: np.ndarray
    d_min: float
    d_max: float
    d_th: float

    def __post_init__(self):
        self.d = np.array(self.d, dtype=float)
        if self.d.ndim != 2 or self.d.shape[0] != self.d.shape[1]:
            raise ConfigError("distance matrix must be square")
        if not 0 <= self.d_min <= self.d_max:
            raise ConfigError("need 0 <= d_min <= d_max")
        if not self.d_th > 0:
            raise ConfigError("d_th must be positive")
        np.fill_diagonal(self.d, self.d_max)
        self.d = np.clip(self.d, self.d_min, self.d_max)

    @classmethod
    def uniform(cls, n, d_init, d_min, d_max, d_th):
        if not d_min <= d_init <= d_max:
            raise ConfigError("d_init must lie within [d_min, d_max]")
        return cls(np.full((n, n), float(d_init)), d_min, d_max, d_th)

    @property
    def n(self):
        return self.d.shape[0]

    def off_diagonal(self):
        return ~np.eye(self.n, dtype=bool)

    def average_outgoing(self):
        """Mean distance from each agent to every other agent."""
        n = self.n
        return (self.d.sum(axis=1) - np.diag(self.d)) / (n - 1)

    def average_incoming(self):
        n = self.n
        return (self.d.sum(axis=0) - np.diag(self.d)) / (n - 1)

    def neighbourhood(self):
        """Boolean ``mask[k, i]``: k lies in the interaction range of i."""
        return (self.d < self.d_th) & self.off_diagonal()

    def copy(self):
        return dataclasses.replace(self, d=self.d.copy())


@dataclasses.dataclass
class TaskBoard:
    """Requirement, accumulated reward and emergency degree of one task."""

    requirement: float
    accumulated: float = 0.0
    eps_s: float = 0.01

    def __post_init__(self):
        if not self.requirement > 0:
            raise ConfigError("requirement must be positive")
        if self.accumulated < 0:
            raise ConfigError("accumulated reward must be non-negative")
        if not self.eps_s > 0:
            raise ConfigError("eps_s must be positive")

    @property
    def emergency(self):
        return max(self.accumulated / self.requirement, self.eps_s)

    @property
    def done(self):
        return self.accumulated >= self.requirement


def selection_weight(s, theta, phi, p: SelectionParams):
    """Selection probability of an agent for a task with emergency ``s``."""
    s_n = np.power(np.asarray(s, dtype=float), p.n_sel)
    th_n = p.alpha * np.power(np.asarray(theta, dtype=float), p.n_sel)
    ph_n = p.beta * np.power(np.asarray(phi, dtype=float), p.n_sel)
    if p.mode == MULTIPLICATIVE:
        denom = s_n + th_n * ph_n
    else:
        denom = s_n + th_n + ph_n
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(denom > 0, s_n / np.where(denom > 0, denom, 1.0), 0.0)
    return float(out) if np.ndim(out) == 0 else out


def sample_batch(weights, batch_size, eligible, rng):
    """Draw ``batch_size`` distinct agents, successively proportional to weight.

    Only eligible agents with positive weight can be drawn.  Returns the
    sorted ids.
    """
    weights = np.asarray(weights, dtype=float)
    mask = np.asarray(eligible, dtype=bool) & (weights > 0)
    candidates = np.flatnonzero(mask)
    if batch_size < 0:
        raise ConfigError("batch_size must be non-negative")
    if len(candidates) < batch_size:
        raise ExhaustionError(
            f"{len(candidates)} eligible agents for a batch of {batch_size}")
    if batch_size == len(candidates):
        return candidates
    w = weights[candidates]
    picked = rng.choice(len(candidates), size=batch_size, replace=False, p=w / w.sum())
    return np.sort(candidates[picked])


def update_task_stimulus(board: TaskBoard, rewards) -> TaskBoard:
    """Add a batch's rewards to the task; the emergency degree follows."""
    rewards = np.asarray(rewards, dtype=float)
    if rewards.size and (np.any(rewards < 0) or not np.isfinite(rewards).all()):
        raise ConfigError("batch rewards must be finite and non-negative")
    board.accumulated += float(rewards.sum())
    return board


def local_deltas(batch, rewards, rho1, clamp_local):
    """State change of every agent from its own action (zero outside batch).

    Members above the batch mean reward get a negative change.
    """
    rewards = np.asarray(rewards, dtype=float)
    out = np.zeros(len(rewards))
    batch = np.asarray(batch, dtype=np.int64)
    if batch.size == 0:
        return out
    r = rewards[batch]
    out[batch] = np.clip(rho1 * (r.mean() - r), -clamp_local, clamp_local)
    return out


def local_state_delta(i, batch, rewards, rho1, clamp_local):
    batch = np.asarray(batch, dtype=np.int64)
    if i not in batch:
        raise ValueError(f"agent {i} is not in the batch")
    return float(local_deltas(batch, rewards, rho1, clamp_local)[i])


def influence_matrix(dm: DistanceMatrix, kernel: KernelTable):
    """``K[k, i] = D(d[k, i])`` inside the interaction range, else 0."""
    K = kernel_eval(kernel, dm.d)
    K = np.where(dm.neighbourhood(), K, 0.0)
    return K


def propagated_deltas(deltas, dm: DistanceMatrix, kernel: KernelTable, rho2, clamp_prop,
                      influence=None):
    """Distance-discounted spread of the previous local changes to every agent."""
    K = influence_matrix(dm, kernel) if influence is None else influence
    deltas = np.asarray(deltas, dtype=float)
    raw = rho2 * (deltas @ K)
    # cancellation residue of a balanced batch is rounding noise, not a signal
    raw[np.abs(raw) <= 1e-12 * rho2 * np.abs(deltas).sum()] = 0.0
    return np.clip(raw, -clamp_prop, clamp_prop)


def propagate_influence(i, deltas, dm: DistanceMatrix, kernel: KernelTable, rho2, clamp_prop):
    return float(propagated_deltas(deltas, dm, kernel, rho2, clamp_prop)[i])


def apply_delta(theta, delta):
    """Add a state change and clamp to ``[0, 1]``."""
    return np.clip(theta + delta, 0.0, 1.0)


def regulate_distance(k, i, dtheta_i, dtheta_k_prev, dm: DistanceMatrix, factor,
                      symmetric=False) -> DistanceMatrix:
    """Shorten ``d[k, i]`` after same-sign changes, lengthen after opposite-sign.

    An exactly zero correlation leaves the distance alone.
    """
    if k == i:
        raise ValueError("no self-distances")
    corr = dtheta_i * dtheta_k_prev
    if corr == 0:
        return dm
    step = -factor if corr > 0 else factor
    dm.d[k, i] = min(max(dm.d[k, i] + step, dm.d_min), dm.d_max)
    if symmetric:
        dm.d[i, k] = min(max(dm.d[i, k] + step, dm.d_min), dm.d_max)
    return dm


def regulate_turn(batch, local, total, dm: DistanceMatrix, factor, neighbourhood=None):
    """Symmetric distance regulation for one turn.

    Every batch member ``k`` is paired with each other batch member and with
    every agent in its interaction range.  The ordered correlation is
    ``total[i] * local[k]``; the two orientations of a pair are summed and
    the pair moves by one ``factor`` step against the sign of that net
    evidence (shorter for agreement).
    """
    n = dm.n
    batch = np.asarray(batch, dtype=np.int64)
    in_batch = np.zeros(n, dtype=bool)
    in_batch[batch] = True
    if neighbourhood is None:
        neighbourhood = dm.neighbourhood()
    pairs = np.zeros((n, n), dtype=bool)
    pairs[batch] = neighbourhood[batch] | in_batch[None, :]
    pairs[batch, batch] = False
    corr = np.where(pairs, np.outer(local, total), 0.0)
    votes = np.sign(corr)
    net = np.sign(votes + votes.T)
    if not net.any():
        return dm
    d = np.clip(dm.d - factor * net, dm.d_min, dm.d_max)
    np.fill_diagonal(d, dm.d_max)
    dm.d = d
    return dm
