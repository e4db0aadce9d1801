"""Online MDP policy iteration with exact and approximate evaluation."""

__version__ = "0.1.0"

from .exact_eval import NonErgodicError, evaluate_policy, stationary_distribution
from .gibbs import GibbsConfig, improve
from .mdp_core import RewardFunction, StochasticPolicy, TabularMdp, validate_mdp
from .omdp_pi import run
from .regret import best_offline_policy, regret_curve, theorem1_bound

__all__ = [
    "__version__",
    "NonErgodicError",
    "evaluate_policy",
    "stationary_distribution",
    "GibbsConfig",
    "improve",
    "RewardFunction",
    "StochasticPolicy",
    "TabularMdp",
    "validate_mdp",
    "run",
    "best_offline_policy",
    "regret_curve",
    "theorem1_bound",
]
