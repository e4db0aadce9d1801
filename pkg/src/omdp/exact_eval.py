"""Exact average-reward evaluation of a fixed stochastic policy.

Everything here is a pure function of ``(mdp, policy, reward)``.  Linear
systems go through an LU factorisation; no explicit inverse is formed.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .mdp_core import as_policy, as_reward, as_transition

__all__ = [
    "NonErgodicError",
    "PolicyEvaluation",
    "MixingEstimate",
    "induced_transition",
    "induced_reward",
    "stationary_distribution",
    "average_reward",
    "evaluate_policy",
    "dobrushin_coefficient",
    "estimate_mixing",
    "contraction_factor",
    "contraction_constant_cpi",
    "estimate_cpi",
]

# reciprocal condition number below which the direct solve is not trusted
_RCOND_MIN = 1e-13
# Dobrushin coefficients at this level are rounding noise of identical rows
_DOB_ROUNDING = 8 * np.finfo(float).eps


class NonErgodicError(RuntimeError):
    """The induced chain has no unique stationary distribution."""


@dataclass(frozen=True)
class PolicyEvaluation:
    rho: float
    d: np.ndarray
    v: np.ndarray
    q: np.ndarray


@dataclass(frozen=True)
class MixingEstimate:
    dobrushin: float
    tau: float

    @property
    def mixing(self) -> bool:
        return self.dobrushin < 1.0


def induced_transition(mdp, policy) -> np.ndarray:
    """``P^pi[s, s'] = sum_a pi(a|s) p(s'|s, a)``."""
    p, pi = as_transition(mdp), as_policy(policy)
    if pi.shape != p.shape[:2]:
        raise ValueError(f"policy shape {pi.shape} does not match MDP {p.shape[:2]}")
    return np.einsum("sa,sat->st", pi, p)


def induced_reward(policy, reward) -> np.ndarray:
    pi, r = as_policy(policy), as_reward(reward)
    if pi.shape != r.shape:
        raise ValueError(f"policy shape {pi.shape} does not match reward {r.shape}")
    return (pi * r).sum(axis=1)


def _lu(a: np.ndarray):
    with warnings.catch_warnings():
        # singularity is detected through rcond below
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(a, check_finite=False)
    anorm = np.abs(a).sum(axis=0).max()
    rcond, info = sla.lapack.dgecon(lu, anorm, norm="1")
    return (lu, piv), (rcond if info == 0 else 0.0)


def _stationary_from_matrix(pp: np.ndarray) -> np.ndarray:
    n = pp.shape[0]
    if n == 1:
        return np.ones(1)
    a = pp.T - np.eye(n)
    a[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    with np.errstate(all="ignore"):
        factors, rcond = _lu(a)
    if rcond > _RCOND_MIN:
        d = sla.lu_solve(factors, rhs, check_finite=False)
        if d.min() > -1e-10 and np.abs(d @ pp - d).sum() <= 1e-10:
            d = np.clip(d, 0.0, None)
            return d / d.sum()
    return _stationary_power(pp)


def _stationary_power(pp: np.ndarray, tol: float = 1e-12, max_iter: int = 1_000_000) -> np.ndarray:
    n = pp.shape[0]
    unit = np.sum(np.abs(np.linalg.eigvals(pp) - 1.0) < 1e-8)
    if unit > 1:
        raise NonErgodicError(f"induced chain has {unit} unit eigenvalues")
    # lazy chain: same stationary distribution, aperiodic
    lazy = 0.5 * (pp + np.eye(n))
    d = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = d @ lazy
        if np.abs(nxt - d).sum() < tol:
            return nxt / nxt.sum()
        d = nxt
    raise NonErgodicError("power iteration for the stationary distribution did not converge")


def stationary_distribution(mdp, policy) -> np.ndarray:
    """Unique ``d`` with ``d P^pi = d`` and ``sum(d) = 1``.

    Solved directly with the last balance equation replaced by the
    normalisation; an ill-conditioned system falls back to power iteration
    after a unit-eigenvalue multiplicity check.
    """
    return _stationary_from_matrix(induced_transition(mdp, policy))


def average_reward(mdp, policy, reward) -> float:
    d = stationary_distribution(mdp, policy)
    return float(d @ induced_reward(policy, reward))


def evaluate_policy(mdp, policy, reward) -> PolicyEvaluation:
    """Gain, stationary distribution, centred value and Q-values.

    ``V`` solves ``(I - P^pi + e d^T) V = R(pi) - e rho`` and therefore
    satisfies ``d^T V = 0``.
    """
    p, r = as_transition(mdp), as_reward(reward)
    pp = induced_transition(mdp, policy)
    d = _stationary_from_matrix(pp)
    rr = induced_reward(policy, r)
    rho = float(d @ rr)
    n = pp.shape[0]
    m = np.eye(n) - pp + np.outer(np.ones(n), d)
    factors, rcond = _lu(m)
    if not rcond > _RCOND_MIN:
        raise NonErgodicError(f"centred Bellman system is singular (rcond={rcond:.3g})")
    v = sla.lu_solve(factors, rr - rho, check_finite=False)
    q = r - rho + p @ v
    return PolicyEvaluation(rho=rho, d=d, v=v, q=q)


def contraction_factor(tau: float) -> float:
    """``exp(-1/tau)``, with the limits 0 at ``tau = 0`` and 1 at ``tau = inf``."""
    if tau <= 0.0:
        return 0.0
    if math.isinf(tau):
        return 1.0
    return math.exp(-1.0 / tau)


def dobrushin_coefficient(transition) -> MixingEstimate:
    """One-step contraction coefficient ``0.5 * max_{s,s'} |P(s) - P(s')|_1``."""
    pp = np.asarray(transition, dtype=float)
    diffs = np.abs(pp[:, None, :] - pp[None, :, :]).sum(axis=2)
    dob = float(min(max(0.5 * diffs.max(), 0.0), 1.0))
    if dob <= _DOB_ROUNDING:
        dob = 0.0
    if dob == 0.0:
        tau = 0.0
    elif dob >= 1.0:
        tau = math.inf
    else:
        tau = -1.0 / math.log(dob)
    return MixingEstimate(dobrushin=dob, tau=tau)


def estimate_mixing(mdp, policies) -> MixingEstimate:
    """Largest Dobrushin coefficient over a sample of policies.

    This is an empirical lower estimate of the uniform mixing constant; it
    cannot certify the supremum over the whole policy class.
    """
    worst = max(
        (dobrushin_coefficient(induced_transition(mdp, pi)) for pi in policies),
        key=lambda m: m.dobrushin,
    )
    return worst


def contraction_constant_cpi(mdp, policy, reward, tau: float) -> float:
    """Policy-to-value Lipschitz estimate for one policy.

    ``(2 - 2c) / (1 - c) * ||(I - P^pi + e d^T)^{-1} Q||_inf`` with
    ``c = exp(-1/tau)`` and the induced (max row sum) matrix norm.
    """
    c = contraction_factor(tau)
    if c >= 1.0:
        raise ValueError("contraction constant needs a finite tau")
    ev = evaluate_policy(mdp, policy, reward)
    n = ev.d.shape[0]
    m = np.eye(n) - induced_transition(mdp, policy) + np.outer(np.ones(n), ev.d)
    factors, rcond = _lu(m)
    if not rcond > _RCOND_MIN:
        raise NonErgodicError("centred Bellman system is singular")
    x = sla.lu_solve(factors, ev.q, check_finite=False)
    return float((2.0 - 2.0 * c) / (1.0 - c) * np.abs(x).sum(axis=1).max())


def estimate_cpi(mdp, policies, rewards, tau: float) -> float:
    """Maximum of :func:`contraction_constant_cpi` over paired samples."""
    return max(contraction_constant_cpi(mdp, pi, r, tau) for pi, r in zip(policies, rewards))
