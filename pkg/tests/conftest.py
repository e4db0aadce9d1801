import numpy as np
import pytest

from omdp.envs import make_random_mdp


def random_policy(rng, n_states, n_actions):
    w = rng.random((n_states, n_actions)) + 1e-3
    return w / w.sum(axis=1, keepdims=True)


def two_state_mdp():
    # single action, P = [[0.9, 0.1], [0.2, 0.8]]
    return np.array([[[0.9, 0.1]], [[0.2, 0.8]]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def mdp5():
    return make_random_mdp(5, 3, 0.1, seed=7)


def lipschitz_trial(rng, eps=0.05):
    """One random (mdp, r1, r2, v1, v2, kappa) draw for the Gibbs Lipschitz checks."""
    n_s, n_a = int(rng.integers(1, 21)), int(rng.integers(1, 6))
    mdp = make_random_mdp(n_s, n_a, eps, seed=int(rng.integers(2**31)))
    kappa = float(rng.uniform(0.05, 10.0))
    scale = float(rng.choice([0.01, 0.1, 1.0, 10.0]))
    r1, r2 = rng.random((n_s, n_a)), rng.random((n_s, n_a))
    v1, v2 = rng.normal(0, scale, n_s), rng.normal(0, scale, n_s)
    return mdp, r1, r2, v1, v2, kappa


# acceptance results, printed once at the end of the session
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (bool(ok), detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
