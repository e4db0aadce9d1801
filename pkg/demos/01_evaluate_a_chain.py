"""Evaluate a policy exactly on the smallest interesting chain.

Two states, one action.  From state 0 the chain stays with probability 0.9;
from state 1 it returns to 0 with probability 0.2.  State 0 pays 1, state 1
pays nothing.
"""
import numpy as np

from omdp.exact_eval import dobrushin_coefficient, evaluate_policy, induced_transition

p = np.array([[[0.9, 0.1]], [[0.2, 0.8]]])
r = np.array([[1.0], [0.0]])
pi = np.ones((2, 1))

ev = evaluate_policy(p, pi, r)
print("stationary distribution", ev.d)  # [2/3, 1/3]
print("gain rho               ", ev.rho)  # 2/3
print("centred values V       ", ev.v)
print("d . V                  ", ev.d @ ev.v)

# The centred value is the long-run excess reward of starting in each state.
# Summing E[r_t] - rho along the chain recovers it.
excess, dist = np.zeros(2), np.eye(2)
for _ in range(2000):
    excess += dist @ r[:, 0] - ev.rho
    dist = dist @ p[:, 0, :]
print("truncated excess sum   ", excess)

mix = dobrushin_coefficient(induced_transition(p, pi))
print(f"Dobrushin coefficient {mix.dobrushin:.3f}, mixing time tau {mix.tau:.3f}")
