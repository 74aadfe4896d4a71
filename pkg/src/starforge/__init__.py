"""Exact interacting star products on finite causal models, by graph sums."""

from .functionals import PolyFunctional, random_functional
from .graphs import Graph, aut_order, canonicalize, enumerate_family, graph
from .interacting import star_hint, star_tint
from .model import FreeTheory, Interaction, fixture_m1, fixture_m2, fixture_m3
from .moller import MollerConfig, quantum_moller, quantum_moller_inverse
from .numerics import Bounds, GaussianRational, TruncatedSeries
from .operators import exp_product, star

__version__ = "0.1.0"

__all__ = [
    "Bounds",
    "GaussianRational",
    "TruncatedSeries",
    "PolyFunctional",
    "random_functional",
    "Graph",
    "graph",
    "canonicalize",
    "aut_order",
    "enumerate_family",
    "FreeTheory",
    "Interaction",
    "fixture_m1",
    "fixture_m2",
    "fixture_m3",
    "MollerConfig",
    "quantum_moller",
    "quantum_moller_inverse",
    "exp_product",
    "star",
    "star_tint",
    "star_hint",
]
