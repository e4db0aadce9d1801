import math

import numpy as np
import pytest

from omdp.envs import make_random_mdp, make_random_reward_schedule
from omdp.exact_eval import average_reward, dobrushin_coefficient, induced_transition, stationary_distribution
from omdp.gibbs import GibbsConfig, gibbs_probs, preferences
from omdp.mdp_core import policy_distance
from omdp.omdp_pi import run
from omdp.regret import (
    FixedPointError,
    RegretCurve,
    TheoryConstants,
    best_offline_policy,
    deterministic_policy_values,
    estimate_theory_constants,
    lemma3_gap,
    proposition4_gap,
    regret_curve,
    regret_decomposition,
    replay_policy,
    theorem1_bound,
    theory_constants,
)


def _bound_oracle(tau, xi, c_pi, t):
    # second, independent evaluation of the bound
    e = math.exp(-1.0 / tau)
    cv = xi * c_pi
    big_c = 6.0 * tau * (2.0 - cv + 1.0 / cv + (1.0 - cv) / (1.0 + cv))
    k = (2.0 - e) / (1.0 - e)
    a = k * big_c * xi * t**cv
    b = (6.0 * tau * xi * k + 2.0 * tau**3) * math.log(t)
    c = 6.0 * tau * xi * k + 2.0 * tau**3 + 2.0 * tau**3 * math.exp(tau + 2.0) + 4.0 * tau
    return a + b + c


def test_single_action_best_policy_one_iteration():
    mdp = make_random_mdp(4, 1, 0.1, seed=0)
    star = best_offline_policy(mdp, np.random.default_rng(0).random((4, 1)), GibbsConfig())
    assert star.iterations == 1 and np.array_equal(star.policy.probs, np.ones((4, 1)))


def test_small_kappa_prefers_rewarded_action():
    mdp = make_random_mdp(3, 2, 0.1, seed=1)
    r = np.tile([1.0, 0.0], (3, 1))
    star = best_offline_policy(mdp, r, GibbsConfig(0.05))
    assert star.policy.probs[:, 0].min() > 0.99
    det = deterministic_policy_values(mdp, r)
    assert det.size == 8 and det.max() == pytest.approx(1.0)
    assert star.rho >= det.max() - 0.01


def test_large_kappa_gives_uniform():
    mdp = make_random_mdp(4, 3, 0.1, seed=2)
    star = best_offline_policy(mdp, np.random.default_rng(2).random((4, 3)), GibbsConfig(1e9))
    assert np.abs(star.policy.probs - 1 / 3).max() <= 1e-8


def test_best_policy_is_a_fixed_point():
    mdp = make_random_mdp(6, 3, 0.1, seed=3)
    r = np.random.default_rng(3).random((6, 3))
    cfg = GibbsConfig(0.3)
    star = best_offline_policy(mdp, r, cfg)
    from omdp.exact_eval import evaluate_policy

    again = gibbs_probs(preferences(mdp, r, evaluate_policy(mdp, star.policy, r).v), cfg.kappa)
    assert policy_distance(star.policy, again) <= 1e-10
    assert len(star.history) == star.iterations + 1


def test_fixed_point_failure_carries_iterates():
    mdp = make_random_mdp(4, 2, 0.1, seed=4)
    with pytest.raises(FixedPointError) as info:
        best_offline_policy(mdp, np.random.default_rng(4).random((4, 2)), GibbsConfig(0.1), tol=0.0, max_iter=2)
    assert info.value.last.shape == (4, 2) and info.value.distance >= 0


def test_deterministic_limit():
    with pytest.raises(ValueError):
        deterministic_policy_values(make_random_mdp(13, 2, 0.1, seed=0), np.zeros((13, 2)))


def test_replayed_best_policy_has_zero_regret():
    mdp = make_random_mdp(5, 3, 0.1, seed=5)
    sched = make_random_reward_schedule(5, 3, 300, 50, seed=5)
    cfg = GibbsConfig(0.5)
    star = best_offline_policy(mdp, sched.mean(), cfg)
    trace = replay_policy(mdp, star.policy, sched)
    curve = regret_curve(mdp, trace, sched, cfg, star=star)
    assert np.abs(curve.cum_regret).max() <= 1e-8


def test_single_action_regret_zero():
    mdp = make_random_mdp(5, 1, 0.1, seed=6)
    sched = make_random_reward_schedule(5, 1, 200, 30, seed=6)
    cfg = GibbsConfig()
    curve = regret_curve(mdp, run(mdp, sched, 200, cfg, seed=0), sched, cfg)
    assert np.abs(curve.cum_regret).max() <= 1e-8


def test_curve_invariants_and_decomposition():
    mdp = make_random_mdp(6, 3, 0.1, seed=7)
    sched = make_random_reward_schedule(6, 3, 500, 50, seed=7)
    cfg = GibbsConfig(0.4)
    trace = run(mdp, sched, 500, cfg, seed=1)
    curve = regret_curve(mdp, trace, sched, cfg)
    assert np.abs(curve.cum_regret - (curve.cum_reward_star - curve.cum_reward_alg)).max() <= 1e-10
    assert np.array_equal(curve.avg_regret, curve.cum_regret / curve.t)
    parts = regret_decomposition(curve)
    assert np.abs(sum(parts.values()) - curve.cum_regret).max() <= 1e-8
    # each term from first principles
    pi = curve.star.policy.probs
    d = stationary_distribution(mdp, pi)
    tables = [r.values for r in sched]
    rho_star = np.array([d @ (pi * r).sum(1) for r in tables])
    assert np.abs(np.cumsum(rho_star - curve.rho_pi_t) - parts["policy"]).max() <= 1e-8
    assert curve.rho_star_mean[-1] == pytest.approx(rho_star.mean(), abs=1e-12)
    assert curve.rho_star_mean[-1] == pytest.approx(average_reward(mdp, pi, sched.mean()), abs=1e-10)
    rows = list(curve.rows())
    assert len(rows) == 500 and len(rows[0]) == len(RegretCurve.columns)


def test_misaligned_lengths():
    mdp = make_random_mdp(3, 2, 0.1, seed=8)
    sched = make_random_reward_schedule(3, 2, 20, 5, seed=8)
    trace = run(mdp, sched, 20, GibbsConfig(), seed=0)
    with pytest.raises(ValueError):
        regret_curve(mdp, trace, list(sched)[:10], GibbsConfig())


def test_theorem1_matches_oracle_on_random_constants():
    rng = np.random.default_rng(8)
    for _ in range(100):
        tau, xi, c_pi = rng.uniform(0.1, 5), rng.uniform(0.05, 10), rng.uniform(0.01, 5)
        t = float(rng.choice([1e2, 1e3, 1e4, 2.5e4]))
        got = theorem1_bound(theory_constants(tau, xi, c_pi), t)
        want = _bound_oracle(tau, xi, c_pi, t)
        assert abs(got - want) <= 1e-12 * abs(want)


def test_theorem1_monotone_and_limit():
    k = TheoryConstants(1.3, 0.7, 0.9)
    vals = [theorem1_bound(k, t) for t in (2, 10, 100, 1e4)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    # c_v -> 0: the power term tends to C * xi times the mixing ratio
    small = TheoryConstants(1.0, 1.0, 1e-6)
    e = math.exp(-1.0)
    ratio = (2 - e) / (1 - e)
    rest = (6 * ratio + 2) * math.log(1e4) + 6 * ratio + 2 + 2 * math.exp(3.0) + 4
    assert theorem1_bound(small, 1e4) - rest == pytest.approx(ratio * small.c, rel=1e-4)
    with pytest.raises(ValueError):
        theorem1_bound(TheoryConstants(math.inf, 1.0, 1.0), 10)


def test_sublinear_flag_both_sides():
    assert TheoryConstants(1.0, 0.5, 1.999).sublinear
    assert not TheoryConstants(1.0, 0.5, 2.001).sublinear
    assert not TheoryConstants(1.0, 0.5, 2.0).sublinear
    with pytest.raises(ValueError):
        theory_constants(1.0, 0.0, 1.0)


def test_estimated_constants():
    mdp = make_random_mdp(10, 4, 0.1, seed=0)
    k = estimate_theory_constants(mdp, GibbsConfig(0.5), n_policies=100, seed=0)
    assert 0 < k.tau < math.inf and k.c_pi > 0 and k.xi == GibbsConfig(0.5).xi
    ident = np.repeat(np.eye(3)[:, None, :], 2, axis=1)
    with pytest.raises(ValueError):
        estimate_theory_constants(ident, GibbsConfig())


def test_proposition4_report():
    mdp = make_random_mdp(4, 2, 0.2, seed=9)
    r = np.random.default_rng(9).random((4, 2))
    cfg = GibbsConfig(1.0)
    trace = run(mdp, [r] * 400, 400, cfg, seed=0, keep_history=True)
    k = TheoryConstants(1.0, cfg.xi, 0.5)
    rep = proposition4_gap(mdp, trace, [r] * 400, cfg, k, steps=[10, 50, 400])
    assert [row["t"] for row in rep] == [10, 50, 400]
    assert all(row["rhs"] > 0 for row in rep)
    assert rep[0]["lhs"] > rep[1]["lhs"] > rep[2]["lhs"]
    with pytest.raises(ValueError):
        proposition4_gap(mdp, run(mdp, [r], 1, cfg, seed=0), [r], cfg, k)


def test_lemma3_matched_start_and_contraction():
    mdp = make_random_mdp(5, 2, 0.2, seed=10)
    pi = np.full((5, 2), 0.5)
    r = [np.random.default_rng(10).random((5, 2))] * 50
    d_pi = stationary_distribution(mdp, pi)
    matched = lemma3_gap(replay_policy(mdp, pi, r, d1=d_pi, keep_history=True), mdp)
    tau = dobrushin_coefficient(induced_transition(mdp, pi)).tau
    t = np.arange(1, 51)
    assert np.all(matched["gap"] <= 2 * np.exp(-t / tau) + 1e-12)
    cold = lemma3_gap(replay_policy(mdp, pi, r, keep_history=True), mdp, tau=tau)
    assert np.all(np.diff(cold["gap"]) <= 1e-15)
    assert "bound" in cold


def test_lemma3_sublinear_growth():
    mdp = make_random_mdp(5, 3, 0.1, seed=11)
    sched = make_random_reward_schedule(5, 3, 10_000, 100, seed=11)
    trace = run(mdp, sched, 10_000, GibbsConfig(0.5), seed=0, keep_history=True)
    cum = lemma3_gap(trace, mdp)["cumulative"]
    assert cum[9_999] < 10 * cum[999]


def test_negative_regret_confirmed_by_sampling():
    # piecewise-constant rewards: the online policy tracks the current segment
    # and collects more than the best fixed policy; check the sign by sampling
    mdp = make_random_mdp(10, 4, 0.1, seed=0)
    horizon = 2000
    sched = make_random_reward_schedule(10, 4, horizon, 100, seed=0)
    cfg = GibbsConfig(0.2)
    traces = [run(mdp, sched, horizon, cfg, seed=s) for s in range(20)]
    curve = regret_curve(mdp, traces[0], sched, cfg)
    alg = np.array([sum(t.realized_reward) for t in traces])

    rng = np.random.default_rng(1)
    pi = curve.star.policy.probs
    n = 400
    s = np.zeros(n, dtype=int)
    total = np.zeros(n)
    pi_cdf = np.cumsum(pi, axis=1)
    p_cdf = np.cumsum(mdp.transition, axis=2)
    for r in sched:
        a = np.minimum((rng.random(n)[:, None] >= pi_cdf[s]).sum(axis=1), 3)
        total += r.values[s, a]
        s = np.minimum((rng.random(n)[:, None] >= p_cdf[s, a]).sum(axis=1), 9)

    gap = total.mean() - alg.mean()
    se = math.sqrt(total.var(ddof=1) / n + alg.var(ddof=1) / len(alg))
    assert curve.cum_regret[-1] < 0
    assert abs(gap - curve.cum_regret[-1]) <= 4 * se
    assert gap + 4 * se < 0
