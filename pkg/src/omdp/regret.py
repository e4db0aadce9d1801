"""Regret against the best fixed Gibbs policy, plus bound and tracking diagnostics."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .exact_eval import (
    average_reward,
    contraction_factor,
    estimate_cpi,
    estimate_mixing,
    evaluate_policy,
    induced_transition,
    stationary_distribution,
)
from .gibbs import GibbsConfig, gibbs_probs, preferences
from .mdp_core import StochasticPolicy, as_policy, as_reward, as_transition, policy_distance
from .omdp_pi import RunTrace, point_mass

__all__ = [
    "FixedPointError",
    "OfflinePolicy",
    "RegretCurve",
    "TheoryConstants",
    "best_offline_policy",
    "fixed_policy_expected_rewards",
    "replay_policy",
    "regret_curve",
    "regret_decomposition",
    "theory_constants",
    "estimate_theory_constants",
    "theorem1_bound",
    "proposition4_gap",
    "lemma3_gap",
    "deterministic_policy_values",
]


class FixedPointError(RuntimeError):
    def __init__(self, message: str, last: np.ndarray, previous: np.ndarray, distance: float):
        super().__init__(message)
        self.last = last
        self.previous = previous
        self.distance = distance


@dataclass
class OfflinePolicy:
    policy: StochasticPolicy
    rho: float
    iterations: int
    history: list[np.ndarray] = field(repr=False, default_factory=list)


def best_offline_policy(
    mdp, mean_reward, cfg: GibbsConfig, tol: float = 1e-10, max_iter: int = 10_000
) -> OfflinePolicy:
    """Fixed point of ``pi -> Gibbs(r, value(r, pi))`` on the mean reward ``r``.

    The total expected average reward of a fixed policy over a reward
    sequence is ``T`` times its gain on the mean reward, so the best fixed
    policy only depends on the mean.  Iteration starts from the uniform Gibbs
    policy ``Gibbs(r, 0)``.
    """
    p, r = as_transition(mdp), as_reward(mean_reward)
    pi = gibbs_probs(preferences(p, r, np.zeros(p.shape[0])), cfg.kappa)
    history = [pi]
    for it in range(1, max_iter + 1):
        ev = evaluate_policy(p, pi, r)
        nxt = gibbs_probs(preferences(p, r, ev.v), cfg.kappa)
        history.append(nxt)
        dist = policy_distance(pi, nxt)
        if dist <= tol:
            return OfflinePolicy(StochasticPolicy(nxt), average_reward(p, nxt, r), it, history)
        pi = nxt
    raise FixedPointError(
        f"no fixed point within {max_iter} iterations (last distance {dist:.3g})",
        history[-1],
        history[-2],
        dist,
    )


def deterministic_policy_values(mdp, reward, limit: int = 4096) -> np.ndarray:
    """Gain of every deterministic policy (cross-check for small instances)."""
    p = as_transition(mdp)
    n_s, n_a = p.shape[0], p.shape[1]
    if n_a**n_s > limit:
        raise ValueError(f"{n_a}^{n_s} deterministic policies exceed the limit {limit}")
    out = []
    for choice in itertools.product(range(n_a), repeat=n_s):
        pi = np.zeros((n_s, n_a))
        pi[np.arange(n_s), choice] = 1.0
        out.append(average_reward(p, pi, reward))
    return np.array(out)


def fixed_policy_expected_rewards(mdp, policy, rewards, d1: np.ndarray | None = None) -> np.ndarray:
    """Expected reward at each step of a fixed policy started from ``d1``."""
    p, pi = as_transition(mdp), as_policy(policy)
    pp = induced_transition(p, pi)
    d = point_mass(p.shape[0]) if d1 is None else np.asarray(d1, dtype=float)
    out = []
    for r in rewards:
        out.append(float(d @ (pi * as_reward(r)).sum(axis=1)))
        d = d @ pp
    return np.array(out)


def replay_policy(mdp, policy, rewards, d1: np.ndarray | None = None, keep_history: bool = False) -> RunTrace:
    """Expected-reward trace of a fixed policy, shaped like an online run.

    No trajectory is sampled; ``states`` and ``actions`` stay empty.
    """
    p, pi = as_transition(mdp), as_policy(policy)
    pp = induced_transition(p, pi)
    d = point_mass(p.shape[0]) if d1 is None else np.asarray(d1, dtype=float)
    trace = RunTrace(d1=d.copy())
    for t, r in enumerate(rewards, start=1):
        r = as_reward(r)
        trace.t.append(t)
        trace.rho_pi.append(average_reward(p, pi, r))
        trace.exp_reward.append(float(d @ (pi * r).sum(axis=1)))
        if keep_history:
            trace.policies.append(pi)
            trace.dists.append(d)
        d = d @ pp
    return trace


@dataclass
class RegretCurve:
    t: np.ndarray
    exp_reward_alg: np.ndarray
    rho_pi_t: np.ndarray
    rho_star_t: np.ndarray
    exp_reward_star: np.ndarray
    star: OfflinePolicy

    @property
    def rho_star_mean(self) -> np.ndarray:
        return np.cumsum(self.rho_star_t) / self.t

    @property
    def cum_reward_alg(self) -> np.ndarray:
        return np.cumsum(self.exp_reward_alg)

    @property
    def cum_reward_star(self) -> np.ndarray:
        return np.cumsum(self.exp_reward_star)

    @property
    def cum_regret(self) -> np.ndarray:
        return self.cum_reward_star - self.cum_reward_alg

    @property
    def avg_regret(self) -> np.ndarray:
        return self.cum_regret / self.t

    columns = (
        "t",
        "exp_reward_alg",
        "rho_pi_t",
        "rho_star_mean",
        "cum_reward_alg",
        "cum_reward_star",
        "cum_regret",
        "avg_regret",
    )

    def rows(self):
        cols = [getattr(self, c) for c in self.columns]
        for k in range(len(self.t)):
            yield (int(cols[0][k]),) + tuple(float(c[k]) for c in cols[1:])


def regret_curve(mdp, trace: RunTrace, rewards, cfg: GibbsConfig, star: OfflinePolicy | None = None) -> RegretCurve:
    """Exact regret of a run against the best fixed policy on the mean reward.

    Both sides use expected rewards under distributions propagated from the
    trace's ``d1``.
    """
    tables = [as_reward(r) for r in rewards]
    if len(tables) != len(trace):
        raise ValueError(f"trace has {len(trace)} steps but {len(tables)} rewards were given")
    p = as_transition(mdp)
    if star is None:
        star = best_offline_policy(p, np.mean(tables, axis=0), cfg)
    pi_star = star.policy.probs
    d_star = stationary_distribution(p, pi_star)
    rho_star = np.array([float(d_star @ (pi_star * r).sum(axis=1)) for r in tables])
    exp_star = fixed_policy_expected_rewards(p, pi_star, tables, trace.d1)
    return RegretCurve(
        t=np.arange(1, len(tables) + 1, dtype=float),
        exp_reward_alg=np.asarray(trace.exp_reward, dtype=float),
        rho_pi_t=np.asarray(trace.rho_pi, dtype=float),
        rho_star_t=rho_star,
        exp_reward_star=exp_star,
        star=star,
    )


def regret_decomposition(curve: RegretCurve) -> dict[str, np.ndarray]:
    """Cumulative mixing, policy and tracking terms of the regret.

    ``mixing``: expected minus stationary reward of the fixed policy;
    ``policy``: gain of the fixed policy minus gain of the running policy;
    ``tracking``: gain of the running policy minus its expected reward.
    """
    return {
        "mixing": np.cumsum(curve.exp_reward_star - curve.rho_star_t),
        "policy": np.cumsum(curve.rho_star_t - curve.rho_pi_t),
        "tracking": np.cumsum(curve.rho_pi_t - curve.exp_reward_alg),
    }


@dataclass(frozen=True)
class TheoryConstants:
    tau: float
    xi: float
    c_pi: float

    @property
    def c_v(self) -> float:
        return self.xi * self.c_pi

    @property
    def c(self) -> float:
        cv = self.c_v
        return 6.0 * self.tau * (2.0 - cv + 1.0 / cv + (1.0 - cv) / (1.0 + cv))

    @property
    def sublinear(self) -> bool:
        return 0.0 < self.c_v < 1.0


def theory_constants(tau: float, xi: float, c_pi: float) -> TheoryConstants:
    if not c_pi > 0.0 or not xi > 0.0:
        raise ValueError("xi and c_pi must be positive")
    return TheoryConstants(tau=tau, xi=xi, c_pi=c_pi)


def estimate_theory_constants(mdp, cfg: GibbsConfig, n_policies: int = 100, seed: int = 0) -> TheoryConstants:
    """Empirical constants from randomly drawn Gibbs policies.

    Each sample draws a reward table in [0, 1] and a value vector, forms the
    Gibbs policy, and pairs it with that reward for the value-sensitivity
    estimate.  The result is a lower estimate of the worst case.
    """
    p = as_transition(mdp)
    n_s, n_a = p.shape[0], p.shape[1]
    rng = np.random.default_rng(seed)
    policies, rewards = [], []
    for k in range(n_policies):
        r = rng.uniform(0.0, 1.0, size=(n_s, n_a))
        v = np.zeros(n_s) if k == 0 else rng.normal(0.0, 1.0 + 2.0 * rng.random(), size=n_s)
        policies.append(gibbs_probs(preferences(p, r, v), cfg.kappa))
        rewards.append(r)
    mixing = estimate_mixing(p, policies)
    if not mixing.mixing:
        raise ValueError("environment is not mixing (Dobrushin coefficient 1 for a sampled policy)")
    c_pi = estimate_cpi(p, policies, rewards, mixing.tau)
    return TheoryConstants(tau=mixing.tau, xi=cfg.xi, c_pi=max(c_pi, np.finfo(float).tiny))


def theorem1_bound(constants: TheoryConstants, horizon: float) -> float:
    """Right-hand side of the OMDP-PI regret bound after ``horizon`` steps."""
    tau, xi, cv = constants.tau, constants.xi, constants.c_v
    if math.isinf(tau):
        raise ValueError("the bound needs a finite mixing time")
    c = contraction_factor(tau)
    ratio = (2.0 - c) / (1.0 - c)
    log_coef = 6.0 * tau * xi * ratio + 2.0 * tau**3
    return (
        ratio * constants.c * xi * horizon**cv
        + log_coef * math.log(horizon)
        + log_coef
        + 2.0 * tau**3 * math.exp(tau + 2.0)
        + 4.0 * tau
    )


def proposition4_gap(
    mdp,
    trace: RunTrace,
    rewards,
    cfg: GibbsConfig,
    constants: TheoryConstants,
    steps=None,
) -> list[dict]:
    """Distance of ``V_t`` from the value of the best policy for the running mean.

    For each requested step ``t`` the best offline policy on the mean of
    ``r_1..r_t`` is recomputed; the left side ``|value - V_t|_inf`` is
    reported next to ``C * C_v * (t + 1)^(C_v - 1)``.  Steps whose fixed point
    fails to converge are reported with ``error`` set.  Requires a trace
    recorded with history.
    """
    if not trace.values:
        raise ValueError("trace was recorded without history")
    tables = [as_reward(r) for r in rewards]
    csum = np.cumsum(tables, axis=0)
    steps = range(1, len(trace) + 1) if steps is None else steps
    out = []
    cv = constants.c_v
    for t in steps:
        rhs = constants.c * cv * (t + 1) ** (cv - 1.0)
        mean_r = csum[t - 1] / t
        row = {"t": t, "rhs": rhs}
        try:
            star = best_offline_policy(mdp, mean_r, cfg)
        except Exception as exc:  # reported, step skipped
            row.update(lhs=math.nan, violated=False, error=str(exc))
            out.append(row)
            continue
        v_star = evaluate_policy(mdp, star.policy, mean_r).v
        lhs = float(np.abs(v_star - trace.values[t - 1]).max())
        row.update(lhs=lhs, violated=lhs > rhs, error=None)
        out.append(row)
    return out


def lemma3_gap(trace: RunTrace, mdp, tau: float | None = None) -> dict:
    """L1 mismatch between the stationary and the actual state distribution.

    Returns per-step mismatches, their cumulative sum and, when ``tau`` is
    given, the diagnostic form ``2 tau^3 ln T + 2 tau^3 + 2 tau^3 e^(tau+2) + 2 tau``.
    """
    if not trace.policies:
        raise ValueError("trace was recorded without history")
    p = as_transition(mdp)
    gaps = np.array(
        [np.abs(stationary_distribution(p, pi) - d).sum() for pi, d in zip(trace.policies, trace.dists)]
    )
    cum = np.cumsum(gaps)
    out = {"gap": gaps, "cumulative": cum}
    if tau is not None and math.isfinite(tau):
        t = np.arange(1, len(gaps) + 1, dtype=float)
        out["bound"] = 2 * tau**3 * np.log(t) + 2 * tau**3 + 2 * tau**3 * math.exp(tau + 2) + 2 * tau
    return out
