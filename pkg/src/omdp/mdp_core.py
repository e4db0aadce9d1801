"""Core tabular types: MDPs, reward tables, stochastic policies, distributions.

Arrays follow the layout ``transition[s, a, s']``, ``reward[s, a]`` and
``policy[s, a]``.  Every function in the package accepts either the wrapper
types defined here or plain array-likes of the right shape.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

SIMPLEX_TOL = 1e-12

__all__ = [
    "SIMPLEX_TOL",
    "TabularMdp",
    "RewardFunction",
    "RewardAverager",
    "StochasticPolicy",
    "StateDistribution",
    "ValidationReport",
    "validate_mdp",
    "uniform_policy",
    "policy_distance",
    "as_transition",
    "as_reward",
    "as_policy",
    "mdp_to_dict",
    "mdp_from_dict",
    "reward_to_dict",
    "reward_from_dict",
    "policy_to_dict",
    "policy_from_dict",
    "save_json",
    "load_json",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TabularMdp:
    """Finite MDP with known dynamics ``p(s'|s, a)``.

    Only the shape is enforced at construction so that malformed kernels can
    still be inspected with :func:`validate_mdp`.
    """

    transition: np.ndarray

    def __post_init__(self) -> None:
        p = _readonly(self.transition)
        if p.ndim != 3 or p.shape[0] != p.shape[2] or min(p.shape) < 1:
            raise ValueError(f"transition must have shape (S, A, S), got {p.shape}")
        object.__setattr__(self, "transition", p)

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    def check(self) -> "TabularMdp":
        report = validate_mdp(self)
        if not report.ok:
            raise ValueError(str(report))
        return self


@dataclass(frozen=True)
class RewardFunction:
    values: np.ndarray

    def __post_init__(self) -> None:
        r = _readonly(self.values)
        if r.ndim != 2:
            raise ValueError(f"reward must be a (S, A) table, got shape {r.shape}")
        if not np.all(np.isfinite(r)) or r.min() < 0.0 or r.max() > 1.0:
            raise ValueError("reward entries must lie in [0, 1]")
        object.__setattr__(self, "values", r)


@dataclass
class RewardAverager:
    """Running mean of the revealed reward tables.

    The mean of zero tables is the all-zero table.
    """

    n_states: int
    n_actions: int
    count: int = 0
    total: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.total is None:
            self.total = np.zeros((self.n_states, self.n_actions))

    def add(self, reward) -> None:
        r = as_reward(reward)
        if r.shape != self.total.shape:
            raise ValueError(f"reward shape {r.shape} != {self.total.shape}")
        self.total = self.total + r
        self.count += 1

    @property
    def mean(self) -> np.ndarray:
        if self.count == 0:
            return np.zeros_like(self.total)
        return self.total / self.count

    def copy(self) -> "RewardAverager":
        return RewardAverager(self.n_states, self.n_actions, self.count, self.total.copy())


@dataclass(frozen=True)
class StochasticPolicy:
    probs: np.ndarray

    def __post_init__(self) -> None:
        p = _readonly(self.probs)
        if p.ndim != 2:
            raise ValueError(f"policy must be a (S, A) matrix, got shape {p.shape}")
        if p.min() < 0.0 or np.abs(p.sum(axis=1) - 1.0).max() > SIMPLEX_TOL:
            raise ValueError("policy rows must be probability vectors")
        object.__setattr__(self, "probs", p)


@dataclass(frozen=True)
class StateDistribution:
    probs: np.ndarray

    def __post_init__(self) -> None:
        d = _readonly(self.probs)
        if d.ndim != 1:
            raise ValueError("state distribution must be a vector")
        if d.min() < 0.0 or abs(d.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError("state distribution must be nonnegative and sum to 1")
        object.__setattr__(self, "probs", d)


def as_transition(mdp) -> np.ndarray:
    return mdp.transition if isinstance(mdp, TabularMdp) else np.asarray(mdp, dtype=float)


def as_reward(reward) -> np.ndarray:
    return reward.values if isinstance(reward, RewardFunction) else np.asarray(reward, dtype=float)


def as_policy(policy) -> np.ndarray:
    return policy.probs if isinstance(policy, StochasticPolicy) else np.asarray(policy, dtype=float)


@dataclass
class ValidationReport:
    ok: bool
    errors: list[str] = field(default_factory=list)
    bad_rows: list[tuple[int, int]] = field(default_factory=list)

    def __str__(self) -> str:
        if self.ok:
            return "valid"
        return "invalid: " + "; ".join(self.errors)


def validate_mdp(mdp) -> ValidationReport:
    """Check every ``(s, a)`` row of the transition kernel.

    Rows with negative entries or whose sum is off by more than
    :data:`SIMPLEX_TOL` are listed individually.
    """
    p = as_transition(mdp)
    errors: list[str] = []
    bad: list[tuple[int, int]] = []
    if p.ndim != 3 or p.shape[0] != p.shape[2] or min(p.shape, default=0) < 1:
        return ValidationReport(False, [f"transition has invalid shape {p.shape}"])
    if not np.all(np.isfinite(p)):
        errors.append("transition contains non-finite entries")
    sums = p.sum(axis=2)
    for s, a in zip(*np.nonzero((np.abs(sums - 1.0) > SIMPLEX_TOL) | (p.min(axis=2) < 0.0))):
        bad.append((int(s), int(a)))
        errors.append(
            f"row (s={s}, a={a}) sums to {sums[s, a]:.15g} with min entry {p[s, a].min():.3g}"
        )
    return ValidationReport(not errors, errors, bad)


def uniform_policy(mdp) -> StochasticPolicy:
    p = as_transition(mdp)
    n_s, n_a = p.shape[0], p.shape[1]
    return StochasticPolicy(np.full((n_s, n_a), 1.0 / n_a))


def policy_distance(p1, p2) -> float:
    """Largest per-state L1 distance ``max_s sum_a |p1(a|s) - p2(a|s)|``."""
    a, b = as_policy(p1), as_policy(p2)
    if a.shape != b.shape:
        raise ValueError(f"policy shapes differ: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).sum(axis=1).max())


# -- JSON documents -----------------------------------------------------------


def mdp_to_dict(mdp) -> dict[str, Any]:
    p = as_transition(mdp)
    return {"n_states": p.shape[0], "n_actions": p.shape[1], "transition": p.tolist()}


def mdp_from_dict(doc: dict[str, Any]) -> TabularMdp:
    p = np.asarray(doc["transition"], dtype=float)
    if p.shape != (doc["n_states"], doc["n_actions"], doc["n_states"]):
        raise ValueError(
            f"transition shape {p.shape} does not match n_states={doc['n_states']}, "
            f"n_actions={doc['n_actions']}"
        )
    return TabularMdp(p)


def reward_to_dict(reward) -> dict[str, Any]:
    return {"values": as_reward(reward).tolist()}


def reward_from_dict(doc: dict[str, Any]) -> RewardFunction:
    return RewardFunction(np.asarray(doc["values"], dtype=float))


def policy_to_dict(policy) -> dict[str, Any]:
    return {"probs": as_policy(policy).tolist()}


def policy_from_dict(doc: dict[str, Any]) -> StochasticPolicy:
    return StochasticPolicy(np.asarray(doc["probs"], dtype=float))


def save_json(doc: dict[str, Any], path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def load_json(path: str | Path) -> dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))
