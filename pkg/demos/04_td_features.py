"""Linear TD(0) against its projected fixed point.

With one-hot features minus one column the value function is representable,
so TD recovers it up to a constant.  With three random features it cannot;
the fixed-point error is then compared with the best achievable error.
"""
import numpy as np

from omdp.envs import make_random_mdp
from omdp.exact_eval import evaluate_policy
from omdp.td_linear import FeatureMap, d_norm, error_bound_check, projected_fixed_point, tabular_minus_one, td_run

rng = np.random.default_rng(0)
mdp = make_random_mdp(5, 2, 0.1, seed=0)
pi = rng.random((5, 2)) + 1e-3
pi /= pi.sum(axis=1, keepdims=True)
r = rng.random((5, 2))
ev = evaluate_policy(mdp, pi, r)

fm = tabular_minus_one(5)
target = fm.phi @ projected_fixed_point(mdp, pi, r, fm)
for n in (1_000, 10_000, 100_000, 200_000):
    st, _ = td_run(mdp, pi, r, fm, n, seed=0)
    print(f"i={n:>7}  |Phi theta - Phi theta*|_D = {d_norm(fm.phi @ st.theta - target, ev.d):.4f}"
          f"  |rho_hat - rho| = {abs(st.rho_hat - ev.rho):.4f}")

mdp8 = make_random_mdp(8, 3, 0.1, seed=1)
pi8 = np.full((8, 3), 1 / 3)
r8 = rng.random((8, 3))
rep = error_bound_check(mdp8, pi8, r8, FeatureMap(rng.normal(size=(8, 3))))
print(f"restricted features: fixed-point error {rep.lhs:.4f}, best {rep.best:.4f}, "
      f"allowed {rep.rhs:.4f}, holds {rep.holds}")
