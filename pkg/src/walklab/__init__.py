"""Simulation toolkit for a random walk on a randomly oriented lattice, its
random-walk-in-random-scenery embedding and the Brownian limit objects."""
from .rng import GeometricParam, RngStream, make_stream
from .lattice import OrientationField, simulate_lattice
from .embedding import IdentityViolation, coupled_simulation
from .continuum import cn_constant
from .experiments import list_experiments, run_experiment

__all__ = [
    "GeometricParam", "RngStream", "make_stream", "OrientationField", "simulate_lattice",
    "IdentityViolation", "coupled_simulation", "cn_constant", "list_experiments",
    "run_experiment",
]
