"""Equilibria of mixed human-driven / autonomous ride-sharing networks.

Thin wrapper over the compiled extension module: the C++ core returns JSON
strings, and this layer decodes them into plain dicts.
"""

import json as _json

from ._core import ModelError, classify_regime, star_alpha
from ._core import simulate as _simulate
from ._core import solve as _solve
from ._core import solve_scenario as _solve_scenario
from ._core import thresholds as _thresholds

__version__ = "0.1.0"

__all__ = [
    "ModelError",
    "classify_regime",
    "simulate",
    "solve",
    "solve_scenario",
    "star_alpha",
    "thresholds",
]


def solve(alpha, theta, beta, omega, pbar, s=None, k=None,
          assignment="hv", mode="mixed"):
    """Solve for the profit-maximizing equilibrium; returns the report dict."""
    return _json.loads(
        _solve(alpha, theta, beta, omega, pbar, s, k, assignment, mode))


def solve_scenario(scenario_json, assignment="hv", mode="mixed"):
    """Solve a scenario given as JSON text; returns the report dict."""
    return _json.loads(_solve_scenario(scenario_json, assignment, mode))


def thresholds(n, xi, beta):
    """Regime thresholds of the star-to-complete family as a dict."""
    return _json.loads(_thresholds(n, xi, beta))


def simulate(scenario_json, assignment="hv", steps=1000, perturb=0.1):
    """Run the forward dynamics from a perturbed equilibrium; returns a dict."""
    return _json.loads(_simulate(scenario_json, assignment, steps, perturb))
