"""Environment generators: slippery east/north grid world and random MDPs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp_core import RewardFunction, TabularMdp

__all__ = [
    "EAST",
    "NORTH",
    "GridWorldSpec",
    "RewardSchedule",
    "grid_state",
    "grid_coords",
    "make_gridworld",
    "supergrid_labels",
    "make_reward_schedule",
    "make_random_reward_schedule",
    "make_random_mdp",
]

EAST, NORTH = 0, 1


@dataclass(frozen=True)
class GridWorldSpec:
    width: int = 16
    height: int = 16
    slip: float = 0.3
    super: int = 4
    seed: int = 0
    teleport_on_goal: bool = True

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("grid dimensions must be positive")
        if not 0.0 <= self.slip < 1.0:
            raise ValueError(f"slip must lie in [0, 1), got {self.slip}")
        if self.super < 1 or self.width % self.super or self.height % self.super:
            raise ValueError(
                f"super-grid edge {self.super} must divide {self.width}x{self.height}"
            )

    @property
    def n_states(self) -> int:
        return self.width * self.height


def grid_state(spec: GridWorldSpec, x: int, y: int) -> int:
    """State index of column ``x`` (eastward) and row ``y`` (northward); 0 is the south-west corner."""
    return y * spec.width + x


def grid_coords(spec: GridWorldSpec, s: int) -> tuple[int, int]:
    return s % spec.width, s // spec.width


def _move(spec: GridWorldSpec, x: int, y: int, direction: int) -> int | None:
    # infeasible direction at a border is aliased to the other one
    east_ok, north_ok = x < spec.width - 1, y < spec.height - 1
    if direction == EAST and not east_ok:
        direction = NORTH
    elif direction == NORTH and not north_ok:
        direction = EAST
    if direction == EAST and east_ok:
        return grid_state(spec, x + 1, y)
    if direction == NORTH and north_ok:
        return grid_state(spec, x, y + 1)
    return None


def make_gridworld(spec: GridWorldSpec) -> TabularMdp:
    """Two-action grid world: east (0) and north (1).

    The intended move happens with probability ``1 - slip``; otherwise the
    agent moves in the other direction.  At the north-east corner no move is
    feasible: the agent returns to the south-west corner when
    ``teleport_on_goal`` is set and stays put otherwise.
    """
    n = spec.n_states
    p = np.zeros((n, 2, n))
    goal = grid_state(spec, spec.width - 1, spec.height - 1)
    for s in range(n):
        x, y = grid_coords(spec, s)
        for a in (EAST, NORTH):
            for direction, prob in ((a, 1.0 - spec.slip), (1 - a, spec.slip)):
                if prob == 0.0:
                    continue
                nxt = _move(spec, x, y, direction)
                if nxt is None:
                    nxt = 0 if spec.teleport_on_goal else goal
                p[s, a, nxt] += prob
    return TabularMdp(p)


def supergrid_labels(spec: GridWorldSpec) -> np.ndarray:
    """Super-grid index of every state, row-major over super-grid blocks."""
    labels = np.empty(spec.n_states, dtype=int)
    per_row = spec.width // spec.super
    for s in range(spec.n_states):
        x, y = grid_coords(spec, s)
        labels[s] = (y // spec.super) * per_row + x // spec.super
    return labels


@dataclass(frozen=True)
class RewardSchedule:
    """Piecewise-constant reward sequence.

    ``change_points`` are 1-based steps at which a new segment starts;
    ``segments[k]`` is the reward table in force from ``change_points[k]``.
    """

    horizon: int
    change_points: tuple[int, ...]
    segments: tuple[RewardFunction, ...]

    def __post_init__(self) -> None:
        cps = self.change_points
        if not cps or cps[0] != 1 or any(b <= a for a, b in zip(cps, cps[1:])):
            raise ValueError("change points must start at 1 and strictly increase")
        if len(cps) != len(self.segments):
            raise ValueError("one reward table is needed per segment")

    def segment_index(self, t: int) -> int:
        if not 1 <= t <= self.horizon:
            raise IndexError(f"step {t} outside 1..{self.horizon}")
        lo, hi = 0, len(self.change_points) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.change_points[mid] <= t:
                lo = mid
            else:
                hi = mid - 1
        return lo

    def reward_at(self, t: int) -> RewardFunction:
        return self.segments[self.segment_index(t)]

    def __len__(self) -> int:
        return self.horizon

    def __iter__(self):
        bounds = list(self.change_points[1:]) + [self.horizon + 1]
        for seg, end, start in zip(self.segments, bounds, self.change_points):
            for _ in range(start, end):
                yield seg

    def mean(self) -> np.ndarray:
        bounds = list(self.change_points[1:]) + [self.horizon + 1]
        total = sum((end - start) * seg.values for seg, start, end in zip(self.segments, self.change_points, bounds))
        return total / self.horizon


def _change_points(horizon: int, period: int) -> tuple[int, ...]:
    if period < 1 or horizon < 1:
        raise ValueError("period and horizon must be positive")
    return tuple(range(1, horizon + 1, period))


def make_reward_schedule(spec: GridWorldSpec, horizon: int, period: int, seed: int | None = None) -> RewardSchedule:
    """Grid-world rewards: each segment draws one U[0, 1] value per super-grid.

    The value is shared by all states of the super-grid and by both actions.
    ``seed`` defaults to ``spec.seed``.
    """
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    labels = supergrid_labels(spec)
    n_super = (spec.width // spec.super) * (spec.height // spec.super)
    cps = _change_points(horizon, period)
    segments = []
    for _ in cps:
        per_state = rng.uniform(0.0, 1.0, size=n_super)[labels]
        segments.append(RewardFunction(np.repeat(per_state[:, None], 2, axis=1)))
    return RewardSchedule(horizon, cps, tuple(segments))


def make_random_reward_schedule(
    n_states: int, n_actions: int, horizon: int, period: int, seed: int
) -> RewardSchedule:
    """Independent U[0, 1] reward per state-action pair, redrawn every ``period`` steps."""
    rng = np.random.default_rng(seed)
    cps = _change_points(horizon, period)
    segments = tuple(RewardFunction(rng.uniform(0.0, 1.0, size=(n_states, n_actions))) for _ in cps)
    return RewardSchedule(horizon, cps, segments)


def make_random_mdp(n_states: int, n_actions: int, mix_epsilon: float = 0.1, seed: int = 0) -> TabularMdp:
    """Random kernel with every entry at least ``mix_epsilon / n_states``.

    Rows are symmetric-Dirichlet draws blended with the uniform distribution,
    so the chain is ergodic under every policy.
    """
    if n_states < 1 or n_actions < 1:
        raise ValueError("need at least one state and one action")
    if not 0.0 < mix_epsilon <= 1.0:
        raise ValueError(f"mix_epsilon must lie in (0, 1], got {mix_epsilon}")
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    p = (1.0 - mix_epsilon) * p + mix_epsilon / n_states
    return TabularMdp(p / p.sum(axis=2, keepdims=True))

