"""Lagrangian multipliers and shadow prices for nonsmooth linearly constrained problems."""

from .errors import *  # noqa: F401,F403
from .kkt import LinearConstraint, kkt_residual, multiplier_interval, multiplier_ranges, multiplier_vector
from .nsfunc import Affine, Comp, Max, PwUni, Quadratic, Sum, dir_deriv, evaluate, subdifferential
from .pricing import ProviderSpec, QuadraticCost, PLCost, Scenario, UserSpec, dual_ascent
from .shadow import multipliers_at, perturb_and_resolve, verify_constraint
from .solver import Problem, solve

__version__ = "0.1.0"
