"""Finite partial monitoring: game geometry, exact Bayesian simulation and regret diagnostics."""

from partmon.bayes import BeliefState, Prior, initial_belief
from partmon.game import Game
from partmon.geometry import Classification, GeometryReport, analyze

__all__ = [
    "Game",
    "Classification",
    "GeometryReport",
    "analyze",
    "Prior",
    "BeliefState",
    "initial_belief",
]

__version__ = "0.1.0"
