"""How sensitive is the Gibbs policy to its rewards?

The regret analysis uses the constant 1 / (sqrt(2) kappa).  Two actions whose
rewards move in opposite directions show that the softmax can move faster:
its L1 change is about 1/kappa times the per-state reward change.
"""
import numpy as np

from omdp.gibbs import GibbsConfig, assumption2_gap, improve

p = np.ones((1, 2, 1))
cfg = GibbsConfig(kappa=1.0)
for eps in (1e-1, 1e-2, 1e-3):
    r1 = np.array([[0.5, 0.5]])
    r2 = np.array([[0.5 + eps, 0.5 - eps]])
    change = np.abs(improve(p, r1, np.zeros(1), cfg).probs - improve(p, r2, np.zeros(1), cfg).probs).sum()
    print(f"eps={eps:g}: policy L1 change {change:.3e}, allowed by 1/(sqrt2 kappa) {cfg.xi * eps:.3e}, "
          f"by 1/kappa {cfg.xi_tight * eps:.3e}")
print("gap with the smaller constant:", assumption2_gap(p, r1, r2, np.zeros(1), cfg))
