"""Gibbs (softmax) policy improvement and its Lipschitz diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mdp_core import StochasticPolicy, as_reward, as_transition

__all__ = [
    "GibbsConfig",
    "preferences",
    "gibbs_probs",
    "improve",
    "assumption1_gap",
    "assumption2_gap",
]


@dataclass(frozen=True)
class GibbsConfig:
    """Exploration temperature ``kappa`` of the Gibbs policy.

    ``xi = 1 / (sqrt(2) * kappa)`` is the Lipschitz constant used
    by the regret analysis.  ``xi_tight = 1 / kappa`` is the constant that
    holds for the softmax map in general (its Jacobian has infinity-to-L1
    norm up to 1); the diagnostics report against ``xi``.
    """

    kappa: float = 1.0

    def __post_init__(self) -> None:
        if not (self.kappa > 0.0 and math.isfinite(self.kappa)):
            raise ValueError(f"kappa must be a positive finite number, got {self.kappa}")

    @property
    def xi(self) -> float:
        return 1.0 / (math.sqrt(2.0) * self.kappa)

    @property
    def xi_tight(self) -> float:
        return 1.0 / self.kappa


def preferences(mdp, reward, value) -> np.ndarray:
    """Action preferences ``r(s, a) + sum_s' p(s'|s, a) V(s')``.

    ``V`` is first shifted by its maximum.  The shift changes every row by
    the same constant, so the Gibbs policy is unchanged, and it makes the
    policy bitwise invariant to constant shifts of ``V`` that are exactly
    representable.
    """
    v = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("value vector must be finite")
    if v.size:
        v = v - v.max()
    return as_reward(reward) + as_transition(mdp) @ v


def gibbs_probs(prefs: np.ndarray, kappa: float) -> np.ndarray:
    """Row-wise softmax of ``prefs / kappa`` with max-subtraction."""
    z = (prefs - prefs.max(axis=1, keepdims=True)) / kappa
    w = np.exp(z)
    return w / w.sum(axis=1, keepdims=True)


def improve(mdp, reward, value, cfg: GibbsConfig) -> StochasticPolicy:
    return StochasticPolicy(gibbs_probs(preferences(mdp, reward, value), cfg.kappa))


def assumption1_gap(mdp, reward, v1, v2, cfg: GibbsConfig, xi: float | None = None) -> float:
    """``max_s |G(r,V1)(s) - G(r,V2)(s)|_1 - xi |V1 - V2|_inf``; should be <= 0.

    ``xi`` defaults to ``cfg.xi``.
    """
    xi = cfg.xi if xi is None else xi
    pi1 = gibbs_probs(preferences(mdp, reward, v1), cfg.kappa)
    pi2 = gibbs_probs(preferences(mdp, reward, v2), cfg.kappa)
    lhs = np.abs(pi1 - pi2).sum(axis=1)
    rhs = xi * np.abs(np.asarray(v1, dtype=float) - np.asarray(v2, dtype=float)).max()
    return float((lhs - rhs).max())


def assumption2_gap(mdp, r1, r2, value, cfg: GibbsConfig, xi: float | None = None) -> float:
    """``max_s (|G(r1,V)(s) - G(r2,V)(s)|_1 - xi |r1(s) - r2(s)|_inf)``; should be <= 0."""
    xi = cfg.xi if xi is None else xi
    a, b = as_reward(r1), as_reward(r2)
    pi1 = gibbs_probs(preferences(mdp, a, value), cfg.kappa)
    pi2 = gibbs_probs(preferences(mdp, b, value), cfg.kappa)
    lhs = np.abs(pi1 - pi2).sum(axis=1)
    rhs = xi * np.abs(a - b).max(axis=1)
    return float((lhs - rhs).max())
