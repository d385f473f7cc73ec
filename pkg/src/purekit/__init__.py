"""Purification of mixed strategies in Bayesian games with certified payoff gaps."""

from .errors import (BudgetInfeasibleError, ParameterError, ParseError, PurekitError,
                     ValidationError)
from .game import GameSpec, SignalPrior, parse_game_spec
from .measures import ActionSpace, FiniteSupportMeasure, make_dense_net, prohorov_distance
from .purify import PurifyConfig, theorem1_purify
from .equilibrium import (epsilon_nash_check, find_equilibrium_discretized,
                          theorem2_purify, theorem3_purify_equilibrium)
from .strategy import MixedStrategy, PureStrategy

__version__ = "0.1.0"

__all__ = [
    "ActionSpace", "BudgetInfeasibleError", "FiniteSupportMeasure", "GameSpec",
    "MixedStrategy", "ParameterError", "ParseError", "PureStrategy", "PurekitError",
    "PurifyConfig", "SignalPrior", "ValidationError", "epsilon_nash_check",
    "find_equilibrium_discretized", "make_dense_net", "parse_game_spec",
    "prohorov_distance", "theorem1_purify", "theorem2_purify",
    "theorem3_purify_equilibrium",
]
