"""Online policy iteration with a noisy evaluation operator.

``V_t = (1 - g_t) V_{t-1} + g_t (H^{pi_t} V_{t-1} + w_t)`` where the operator
returns an estimate of the value of ``pi_t`` under ``r_t``.  The exact
operator with ``g_t = 1/t`` reproduces :func:`omdp.omdp_pi.run`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numba
import numpy as np

from .exact_eval import NonErgodicError, average_reward, evaluate_policy, induced_reward, induced_transition
from .gibbs import GibbsConfig, gibbs_probs, preferences
from .mdp_core import as_reward, as_transition
from .omdp_pi import OmdpPiState, RunTrace, StepFailure, drive
from .td_linear import FeatureMap, TdState, default_alpha, td_run

__all__ = [
    "EvalOperator",
    "ExactOperator",
    "MonteCarloOperator",
    "TdOperator",
    "StepSchedule",
    "HarmonicSchedule",
    "PowerSchedule",
    "ConstantSchedule",
    "si_step",
    "si_run",
    "ContractionReport",
    "check_contraction",
]


class EvalOperator:
    """Value estimate for ``(mdp, policy, reward, previous value)``.

    ``exact`` operators return the centred value function with zero noise;
    stochastic ones must be unbiased with finite second moment.
    """

    exact: bool = False

    def __call__(self, mdp, policy, reward, value, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


class ExactOperator(EvalOperator):
    exact = True

    def __call__(self, mdp, policy, reward, value, rng=None) -> np.ndarray:
        return evaluate_policy(mdp, policy, reward).v


@numba.njit(cache=True)
def _count_rollouts(pp, centred, n_rollouts, horizon, seed):
    # state-occupancy counts of n_rollouts independent chains per start state
    np.random.seed(seed)
    n = pp.shape[0]
    out = np.zeros(n)
    counts = np.zeros(n, dtype=np.int64)
    nxt = np.zeros(n, dtype=np.int64)
    for start in range(n):
        counts[:] = 0
        counts[start] = n_rollouts
        total = 0.0
        for _ in range(horizon):
            for s in range(n):
                total += counts[s] * centred[s]
            nxt[:] = 0
            for s in range(n):
                left = counts[s]
                mass = 1.0
                for s2 in range(n - 1):
                    if left == 0:
                        break
                    p = pp[s, s2]
                    if p <= 0.0:
                        continue
                    if p >= mass:
                        k = left
                    else:
                        k = np.random.binomial(left, p / mass)
                    nxt[s2] += k
                    left -= k
                    mass -= p
                nxt[n - 1] += left
            counts[:] = nxt
        out[start] = total / n_rollouts
    return out


@dataclass
class MonteCarloOperator(EvalOperator):
    """Rollout estimate of the centred value function.

    From every start state, ``n_rollouts`` independent chains of length
    ``horizon`` follow the induced dynamics and accumulate
    ``R(pi)(s_i) - rho``; the estimate is the mean over rollouts.  The gain
    is computed exactly (dynamics are known); the expected per-state reward
    replaces the sampled action reward, which keeps the estimator unbiased
    up to the truncation at ``horizon``.  Chains are simulated through their
    occupancy counts, which has the same distribution as simulating them
    one by one.
    """

    n_rollouts: int = 1000
    horizon: int = 1000
    exact = False

    def __call__(self, mdp, policy, reward, value, rng: np.random.Generator) -> np.ndarray:
        pp = induced_transition(mdp, policy)
        rho = average_reward(mdp, policy, reward)
        centred = induced_reward(policy, reward) - rho
        seed = int(rng.integers(0, 2**31 - 1))
        return _count_rollouts(pp, centred, self.n_rollouts, self.horizon, seed)


@dataclass
class TdOperator(EvalOperator):
    """Linear TD(0) estimate ``(I - e d^T) Phi theta`` of the value function.

    Each call runs ``n_iter`` TD transitions under the current policy,
    warm-started from the previous parameters.
    """

    features: FeatureMap
    n_iter: int = 20_000
    exact = False

    def __post_init__(self) -> None:
        self._state: TdState | None = None
        self._s = 0

    def __call__(self, mdp, policy, reward, value, rng: np.random.Generator) -> np.ndarray:
        start = self._state or TdState.zeros(self.features.k, default_alpha)
        start = replace(start, i=0)
        state, self._s = td_run(
            mdp, policy, reward, self.features, self.n_iter, int(rng.integers(0, 2**31 - 1)),
            state=start, start_state=self._s,
        )
        self._state = state
        d = evaluate_policy(mdp, policy, reward).d
        v = self.features.phi @ state.theta
        return v - d @ v


class StepSchedule:
    """Step sizes ``g_t`` for ``t >= 1``.

    ``divergent_sum`` and ``square_summable`` declare whether the schedule
    satisfies ``sum g = inf`` and ``sum g^2 < inf``.
    """

    divergent_sum: bool = True
    square_summable: bool = True

    def __call__(self, t: int) -> float:
        raise NotImplementedError


class HarmonicSchedule(StepSchedule):
    def __call__(self, t: int) -> float:
        return 1.0 / t


@dataclass
class PowerSchedule(StepSchedule):
    """``c / t^p``, capped at 1.  Robbins-Monro for ``p`` in (0.5, 1]."""

    c: float = 1.0
    p: float = 1.0

    def __post_init__(self) -> None:
        if self.c <= 0.0:
            raise ValueError("c must be positive")

    @property
    def divergent_sum(self) -> bool:
        return self.p <= 1.0

    @property
    def square_summable(self) -> bool:
        return self.p > 0.5

    def __call__(self, t: int) -> float:
        return min(1.0, self.c / t**self.p)


@dataclass
class ConstantSchedule(StepSchedule):
    c: float = 1.0
    square_summable = False

    def __post_init__(self) -> None:
        if not 0.0 < self.c <= 1.0:
            raise ValueError("constant step must lie in (0, 1]")

    def __call__(self, t: int) -> float:
        return self.c


def _si_advance(operator: EvalOperator, schedule: StepSchedule, op_rng: np.random.Generator | None):
    def advance(state: OmdpPiState, mdp, reward_t, rng=None):
        t = state.t + 1
        try:
            rho = average_reward(mdp, state.policy, reward_t)
            estimate = operator(mdp, state.policy, reward_t, state.value, op_rng if op_rng is not None else rng)
        except (NonErgodicError, np.linalg.LinAlgError) as exc:
            raise StepFailure(f"operator failed at t={t}: {exc}", t, state.policy) from exc
        gamma = schedule(t)
        value = (1.0 - gamma) * state.value + gamma * estimate
        averager = state.averager.copy()
        averager.add(reward_t)
        nxt = gibbs_probs(preferences(mdp, averager.mean, value), state.kappa)
        return replace(state, t=t, value=value, averager=averager, policy=nxt), rho, estimate

    return advance


def si_step(state: OmdpPiState, mdp, reward_t, operator: EvalOperator, schedule: StepSchedule, rng=None) -> OmdpPiState:
    """One value update with ``operator`` and ``schedule``; returns the new state.

    The state's ``policy`` must be ``Gibbs(mean reward so far, V_{t-1})``, as
    produced by :func:`omdp.omdp_pi.init` and by this function.
    """
    if rng is None:
        rng = np.random.default_rng([state.rng_seed, 1, state.t + 1])
    new_state, _, _ = _si_advance(operator, schedule, rng)(state, as_transition(mdp), as_reward(reward_t))
    return new_state


def si_run(
    mdp,
    rewards,
    horizon: int,
    cfg: GibbsConfig,
    seed: int,
    operator: EvalOperator | None = None,
    schedule: StepSchedule | None = None,
    d1: np.ndarray | None = None,
    keep_history: bool = False,
    on_step=None,
) -> RunTrace:
    """Online loop with a pluggable operator; same trace layout as ``omdp_pi.run``.

    The operator draws from its own generator, so the sampled trajectory
    matches ``omdp_pi.run`` for equal seeds whenever the policies agree.
    """
    operator = ExactOperator() if operator is None else operator
    schedule = HarmonicSchedule() if schedule is None else schedule
    op_rng = np.random.default_rng([seed, 1])
    return drive(mdp, rewards, horizon, cfg, seed, _si_advance(operator, schedule, op_rng), d1, keep_history, on_step)


@dataclass
class ContractionReport:
    ratios: list[float]
    skipped: int

    @property
    def max_ratio(self) -> float:
        return max(self.ratios) if self.ratios else math.nan

    @property
    def n_expanding(self) -> int:
        return sum(r >= 1.0 for r in self.ratios)


def check_contraction(
    operator: EvalOperator,
    mdp,
    reward,
    cfg: GibbsConfig,
    trials: int = 100,
    seed: int = 0,
    pairs=None,
) -> ContractionReport:
    """Empirical ratio ``|H^pi V - H^pi' V'|_inf / |V - V'|_inf`` with ``pi = Gibbs(r, V)``.

    ``pairs`` overrides the random ``(V, V')`` draws.  Pairs with ``V = V'``
    are skipped.
    """
    p, r = as_transition(mdp), as_reward(reward)
    rng = np.random.default_rng(seed)
    if pairs is None:
        n = p.shape[0]
        pairs = [(rng.normal(size=n), rng.normal(size=n)) for _ in range(trials)]
    ratios, skipped = [], 0
    for v1, v2 in pairs:
        v1, v2 = np.asarray(v1, dtype=float), np.asarray(v2, dtype=float)
        den = np.abs(v1 - v2).max()
        if den == 0.0:
            skipped += 1
            continue
        pi1 = gibbs_probs(preferences(p, r, v1), cfg.kappa)
        pi2 = gibbs_probs(preferences(p, r, v2), cfg.kappa)
        h1 = operator(p, pi1, r, v1, rng)
        h2 = operator(p, pi2, r, v2, rng)
        ratios.append(float(np.abs(h1 - h2).max() / den))
    return ContractionReport(ratios, skipped)
