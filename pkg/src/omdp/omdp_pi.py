"""Online policy iteration on an MDP with adversarially changing rewards.

At step ``t`` the agent acts with ``pi_t = Gibbs(mean of r_1..r_{t-1}, V_{t-1})``,
sees ``r_t`` and folds the exact value of ``pi_t`` under ``r_t`` into a
running average ``V_t = (1 - 1/t) V_{t-1} + (1/t) value(r_t, pi_t)``.

Besides the sampled trajectory, :func:`run` propagates the exact state
distribution of the algorithm so that expected rewards, and hence regret,
are deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .exact_eval import NonErgodicError, evaluate_policy, induced_transition
from .gibbs import GibbsConfig, gibbs_probs, preferences
from .mdp_core import RewardAverager, as_reward, as_transition

__all__ = ["OmdpPiState", "RunTrace", "StepFailure", "RunAborted", "init", "step", "run", "drive", "point_mass"]


class StepFailure(RuntimeError):
    """Evaluation of the current policy failed (non-ergodic induced chain)."""

    def __init__(self, message: str, t: int, policy: np.ndarray):
        super().__init__(message)
        self.t = t
        self.policy = policy


class RunAborted(RuntimeError):
    def __init__(self, message: str, trace: "RunTrace"):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class OmdpPiState:
    t: int
    value: np.ndarray
    averager: RewardAverager = field(compare=False)
    policy: np.ndarray
    rng_seed: int
    kappa: float = 1.0

    def __eq__(self, other) -> bool:
        if not isinstance(other, OmdpPiState):
            return NotImplemented
        return (
            self.t == other.t
            and self.rng_seed == other.rng_seed
            and self.kappa == other.kappa
            and np.array_equal(self.value, other.value)
            and np.array_equal(self.policy, other.policy)
            and self.averager.count == other.averager.count
            and np.array_equal(self.averager.total, other.averager.total)
        )


@dataclass
class RunTrace:
    """Per-step record of an online run.

    Row ``k`` describes step ``t = k + 1``.  ``policies``, ``dists``,
    ``step_values`` and ``values`` are filled only when history is kept.
    """

    t: list[int] = field(default_factory=list)
    rho_pi: list[float] = field(default_factory=list)
    exp_reward: list[float] = field(default_factory=list)
    realized_reward: list[float] = field(default_factory=list)
    states: list[int] = field(default_factory=list)
    actions: list[int] = field(default_factory=list)
    policies: list[np.ndarray] = field(default_factory=list)
    dists: list[np.ndarray] = field(default_factory=list)
    step_values: list[np.ndarray] = field(default_factory=list)
    values: list[np.ndarray] = field(default_factory=list)
    d1: np.ndarray | None = None
    final_state: OmdpPiState | None = None

    def __len__(self) -> int:
        return len(self.t)


def point_mass(n_states: int, s: int = 0) -> np.ndarray:
    d = np.zeros(n_states)
    d[s] = 1.0
    return d


def init(mdp, cfg: GibbsConfig, seed: int) -> OmdpPiState:
    p = as_transition(mdp)
    n_s, n_a = p.shape[0], p.shape[1]
    value = np.zeros(n_s)
    averager = RewardAverager(n_s, n_a)
    policy = gibbs_probs(preferences(p, averager.mean, value), cfg.kappa)
    return OmdpPiState(t=0, value=value, averager=averager, policy=policy, rng_seed=int(seed), kappa=cfg.kappa)


def _sample(rng: np.random.Generator, probs: np.ndarray) -> int:
    return min(int(np.searchsorted(np.cumsum(probs), rng.random(), side="right")), probs.size - 1)


def _advance(state: OmdpPiState, mdp, reward_t: np.ndarray, rng=None):
    t = state.t + 1
    try:
        ev = evaluate_policy(mdp, state.policy, reward_t)
    except (NonErgodicError, np.linalg.LinAlgError) as exc:
        raise StepFailure(f"policy evaluation failed at t={t}: {exc}", t, state.policy) from exc
    gamma = 1.0 / t
    value = (1.0 - gamma) * state.value + gamma * ev.v
    averager = state.averager.copy()
    averager.add(reward_t)
    nxt = gibbs_probs(preferences(mdp, averager.mean, value), state.kappa)
    return replace(state, t=t, value=value, averager=averager, policy=nxt), ev.rho, ev.v


def step(state: OmdpPiState, mdp, reward_t, current_state: int, rng: np.random.Generator | None = None):
    """One online step from ``current_state``.

    Returns the sampled action and the updated state, whose ``policy`` is
    already the next policy.  Without an explicit ``rng`` the action draw is
    seeded from ``(rng_seed, t)``.
    """
    if rng is None:
        rng = np.random.default_rng([state.rng_seed, state.t + 1])
    action = _sample(rng, state.policy[current_state])
    new_state, _, _ = _advance(state, mdp, as_reward(reward_t))
    return action, new_state


def run(
    mdp,
    rewards: Iterable,
    horizon: int,
    cfg: GibbsConfig,
    seed: int,
    d1: np.ndarray | None = None,
    keep_history: bool = False,
    on_step=None,
) -> RunTrace:
    """Execute ``horizon`` online steps against the reward source ``rewards``.

    ``rewards`` yields one reward table per step.  ``on_step(row)`` is called
    after every step with a dict of that step's record.  On a step failure
    :class:`RunAborted` carries the partial trace.
    """
    return drive(mdp, rewards, horizon, cfg, seed, _advance, d1, keep_history, on_step)


def drive(mdp, rewards, horizon, cfg, seed, advance, d1=None, keep_history=False, on_step=None) -> RunTrace:
    """Shared online loop; ``advance(state, p, r_t, rng)`` returns ``(state, rho, step_value)``."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    p = as_transition(mdp)
    n_s = p.shape[0]
    d = point_mass(n_s, 0) if d1 is None else np.asarray(d1, dtype=float)
    rng = np.random.default_rng(seed)
    state = init(p, cfg, seed)
    trace = RunTrace(d1=d.copy())
    s = _sample(rng, d)
    it = iter(rewards)
    for t in range(1, horizon + 1):
        try:
            r_t = as_reward(next(it))
        except StopIteration:
            raise RunAborted(f"reward source exhausted at t={t}", trace) from None
        pi_t = state.policy
        a = _sample(rng, pi_t[s])
        try:
            state, rho, step_value = advance(state, p, r_t, rng)
        except StepFailure as exc:
            trace.final_state = state
            raise RunAborted(str(exc), trace) from exc
        exp_r = float(d @ (pi_t * r_t).sum(axis=1))
        trace.t.append(t)
        trace.rho_pi.append(rho)
        trace.exp_reward.append(exp_r)
        trace.realized_reward.append(float(r_t[s, a]))
        trace.states.append(s)
        trace.actions.append(a)
        if keep_history:
            trace.policies.append(pi_t)
            trace.dists.append(d)
            trace.step_values.append(step_value)
            trace.values.append(state.value)
        if on_step is not None:
            on_step({"t": t, "rho_pi": rho, "exp_reward": exp_r, "state": s, "action": a})
        d = d @ induced_transition(p, pi_t)
        s = _sample(rng, p[s, a])
    trace.final_state = state
    return trace
