"""Chemotaxis transport simulator for microfluidic chips.

Two rectangular 2D chambers are connected by a set of straight 1D channels.
Cell densities and chemoattractants evolve by diffusion, chemotaxis and
reaction; the chamber/channel interfaces use Kedem-Katchalsky flux coupling
discretized so that the combined trapezoidal mass is conserved exactly.
"""

from chemochip.geometry import ChipLayout, DiscreteLayout, build_grid, validate_layout
from chemochip.model import ModelParams
from chemochip.solver import SolveSettings, SystemState, advance_step, run_simulation

__all__ = [
    "ChipLayout",
    "DiscreteLayout",
    "ModelParams",
    "SolveSettings",
    "SystemState",
    "advance_step",
    "build_grid",
    "run_simulation",
    "validate_layout",
]

__version__ = "0.1.0"
