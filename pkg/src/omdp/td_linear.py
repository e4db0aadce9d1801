"""Average-reward TD(0) with linear value features.

The parameter update multiplies the temporal-difference error by the
feature vector of the visited state (standard TD(0)); the gain estimate is
a running average of the observed rewards with the same step size.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numba
import numpy as np

from .envs import GridWorldSpec, supergrid_labels
from .exact_eval import contraction_factor, dobrushin_coefficient, evaluate_policy, induced_reward, induced_transition
from .mdp_core import as_policy, as_reward, as_transition

__all__ = [
    "FeatureMap",
    "TdState",
    "default_alpha",
    "constant_alpha",
    "tabular_minus_one",
    "supergrid_indicators",
    "td_step",
    "td_run",
    "projected_fixed_point",
    "projected_residual",
    "d_norm",
    "ErrorBoundReport",
    "error_bound_check",
]


@dataclass(frozen=True)
class FeatureMap:
    """Feature matrix ``phi`` of shape ``(S, K)``.

    Must have full column rank and must not span the constant vector, since
    average-reward values are only defined up to a constant.
    """

    phi: np.ndarray

    def __post_init__(self) -> None:
        phi = np.array(self.phi, dtype=float)
        if phi.ndim != 2 or phi.shape[1] < 1:
            raise ValueError(f"features must be an (S, K) matrix, got shape {phi.shape}")
        n, k = phi.shape
        if np.linalg.matrix_rank(phi) < k:
            raise ValueError("feature matrix must have full column rank")
        e = np.ones(n)
        coef, *_ = np.linalg.lstsq(phi, e, rcond=None)
        if np.linalg.norm(phi @ coef - e) <= 1e-8:
            raise ValueError("the constant vector lies in the feature span")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)

    @property
    def k(self) -> int:
        return self.phi.shape[1]

    def to_dict(self) -> dict:
        return {"phi": self.phi.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "FeatureMap":
        return cls(np.asarray(doc["phi"], dtype=float))


def tabular_minus_one(n_states: int, drop: int | None = None) -> FeatureMap:
    """One-hot features with the column of state ``drop`` (default: last) removed."""
    if n_states < 2:
        raise ValueError("need at least two states")
    drop = n_states - 1 if drop is None else drop
    return FeatureMap(np.delete(np.eye(n_states), drop, axis=1))


def supergrid_indicators(spec: GridWorldSpec) -> FeatureMap:
    """Super-grid membership indicators, last super-grid dropped.

    The full indicator set partitions the states and would span the constant.
    """
    labels = supergrid_labels(spec)
    n_super = labels.max() + 1
    if n_super < 2:
        raise ValueError("need at least two super-grids")
    phi = np.eye(n_super)[labels][:, :-1]
    return FeatureMap(phi)


def default_alpha(i: int) -> float:
    return 1.0 / (100.0 + i**0.8)


def constant_alpha(c: float) -> Callable[[int], float]:
    return lambda i: c


@dataclass(frozen=True)
class TdState:
    theta: np.ndarray
    rho_hat: float = 0.0
    i: int = 0
    alpha: Callable[[int], float] = default_alpha

    @classmethod
    def zeros(cls, k: int, alpha: Callable[[int], float] = default_alpha) -> "TdState":
        return cls(np.zeros(k), 0.0, 0, alpha)


def td_step(state: TdState, features: FeatureMap, sample) -> TdState:
    """Apply one transition ``(s, a, r, s_next)``; ``alpha`` is evaluated at ``i + 1``."""
    s, _a, r, s_next = sample
    phi = features.phi
    a = state.alpha(state.i + 1)
    delta = r - state.rho_hat + state.theta @ phi[s_next] - state.theta @ phi[s]
    if not math.isfinite(delta):
        raise FloatingPointError(f"non-finite TD error at iteration {state.i + 1}")
    theta = state.theta + a * delta * phi[s]
    rho_hat = (1.0 - a) * state.rho_hat + a * r
    return replace(state, theta=theta, rho_hat=rho_hat, i=state.i + 1)


@numba.njit(cache=True)
def _td_kernel(pi_cdf, p_cdf, reward, phi, alphas, u_act, u_next, theta, rho_hat, s):
    n_s, n_a = pi_cdf.shape
    k = phi.shape[1]
    for j in range(alphas.shape[0]):
        a = 0
        while a < n_a - 1 and u_act[j] >= pi_cdf[s, a]:
            a += 1
        s2 = 0
        while s2 < n_s - 1 and u_next[j] >= p_cdf[s, a, s2]:
            s2 += 1
        r = reward[s, a]
        v_next = 0.0
        v_cur = 0.0
        for m in range(k):
            v_next += theta[m] * phi[s2, m]
            v_cur += theta[m] * phi[s, m]
        delta = r - rho_hat + v_next - v_cur
        if not np.isfinite(delta):
            return theta, rho_hat, s, j
        al = alphas[j]
        for m in range(k):
            theta[m] += al * delta * phi[s, m]
        rho_hat = (1.0 - al) * rho_hat + al * r
        s = s2
    return theta, rho_hat, s, -1


def td_run(
    mdp,
    policy,
    reward,
    features: FeatureMap,
    n_iter: int,
    seed: int = 0,
    state: TdState | None = None,
    start_state: int = 0,
    tol: float | None = None,
    check_every: int = 10_000,
):
    """Run TD(0) along a sampled trajectory of the fixed policy.

    Stops after ``n_iter`` transitions, or earlier once ``tol`` is given and
    ``theta`` moves by less than ``tol`` (sup norm) over ``check_every``
    transitions.  Returns ``(state, last_visited_state)``.
    """
    p, pi, r = as_transition(mdp), as_policy(policy), as_reward(reward)
    state = TdState.zeros(features.k) if state is None else state
    rng = np.random.default_rng(seed)
    pi_cdf = np.cumsum(pi, axis=1)
    p_cdf = np.cumsum(p, axis=2)
    theta = np.array(state.theta, dtype=float)
    rho_hat, i, s = float(state.rho_hat), state.i, int(start_state)
    chunk = n_iter if tol is None else check_every
    done = 0
    while done < n_iter:
        m = min(chunk, n_iter - done)
        alphas = np.array([state.alpha(i + j + 1) for j in range(m)], dtype=float)
        u = rng.random((2, m))
        before = theta.copy()
        theta, rho_hat, s, bad = _td_kernel(pi_cdf, p_cdf, r, features.phi, alphas, u[0], u[1], theta, rho_hat, s)
        if bad >= 0:
            raise FloatingPointError(f"non-finite TD error at iteration {i + bad + 1}")
        i += m
        done += m
        if tol is not None and np.abs(theta - before).max() < tol:
            break
    return replace(state, theta=theta, rho_hat=rho_hat, i=i), s


def d_norm(x: np.ndarray, d: np.ndarray) -> float:
    return float(math.sqrt(max(float(d @ (x * x)), 0.0)))


def projected_fixed_point(mdp, policy, reward, features: FeatureMap) -> np.ndarray:
    """Solve ``Phi^T D (I - P) Phi theta = Phi^T D (R - e rho)``.

    This is the fixed point of the stationary-weighted projection of the
    average-reward Bellman operator onto the feature span.
    """
    ev = evaluate_policy(mdp, policy, reward)
    pp = induced_transition(mdp, policy)
    phi = features.phi
    dphi = phi * ev.d[:, None]
    a = dphi.T @ (phi - pp @ phi)
    b = dphi.T @ (induced_reward(policy, reward) - ev.rho)
    try:
        return np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("projected fixed-point system is singular") from exc


def projected_residual(mdp, policy, reward, features: FeatureMap, theta: np.ndarray) -> float:
    """D-norm residual of the projected Bellman equation at ``theta``."""
    ev = evaluate_policy(mdp, policy, reward)
    pp = induced_transition(mdp, policy)
    phi = features.phi
    target = induced_reward(policy, reward) - ev.rho + pp @ (phi @ theta)
    w = np.sqrt(ev.d)
    coef, *_ = np.linalg.lstsq(phi * w[:, None], target * w, rcond=None)
    return d_norm(phi @ coef - phi @ theta, ev.d)


@dataclass(frozen=True)
class ErrorBoundReport:
    lhs: float
    best: float
    factor: float
    holds: bool

    @property
    def rhs(self) -> float:
        return self.factor * self.best


def error_bound_check(mdp, policy, reward, features: FeatureMap, tau: float | None = None) -> ErrorBoundReport:
    """Compare the centred fixed-point error with the best achievable error.

    ``lhs = |(I - e d^T) Phi theta* - V|_D`` and ``best`` is the infimum of the
    same quantity over all ``theta`` (weighted least squares).  The bound
    holds when ``lhs <= best / sqrt(1 - exp(-2/tau))``.  ``tau`` defaults to
    the Dobrushin estimate of the induced chain.
    """
    if tau is None:
        tau = dobrushin_coefficient(induced_transition(mdp, policy)).tau
    c = contraction_factor(tau)
    if c >= 1.0:
        raise ValueError("error bound needs a mixing chain (finite tau)")
    ev = evaluate_policy(mdp, policy, reward)
    phi = features.phi
    n = phi.shape[0]
    centre = np.eye(n) - np.outer(np.ones(n), ev.d)
    theta_star = projected_fixed_point(mdp, policy, reward, features)
    lhs = d_norm(centre @ phi @ theta_star - ev.v, ev.d)
    b = centre @ phi
    w = np.sqrt(ev.d)
    coef, *_ = np.linalg.lstsq(b * w[:, None], ev.v * w, rcond=None)
    best = d_norm(b @ coef - ev.v, ev.d)
    factor = 1.0 / math.sqrt(1.0 - c * c)
    return ErrorBoundReport(lhs=lhs, best=best, factor=factor, holds=lhs <= factor * best + 1e-12)
