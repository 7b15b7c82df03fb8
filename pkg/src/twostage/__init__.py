"""Two-stage contact process: graphical construction, dual, CTMC oracle and estimators."""

from __future__ import annotations

__version__ = "0.1.0"

from .configuration import (Configuration, SiteState, all_mature, compatible, from_sites, is_empty, join,
                            leq, single_site)
from .graph import (FiniteGraph, GraphError, LatticeSpec, build_lattice, cycle_graph, from_adjacency,
                    parse_adjacency, path_graph, read_adjacency, star_graph)
from .graphical import (EventSet, Params, Trajectory, check_duality, coupled_pair, evolve_dual,
                        evolve_forward, sample_events, superpose)

__all__ = [
    "__version__", "Configuration", "SiteState", "all_mature", "compatible", "from_sites", "is_empty",
    "join", "leq", "single_site", "FiniteGraph", "GraphError", "LatticeSpec", "build_lattice",
    "cycle_graph", "from_adjacency", "parse_adjacency", "path_graph", "read_adjacency", "star_graph",
    "EventSet", "Params", "Trajectory", "check_duality", "coupled_pair", "evolve_dual",
    "evolve_forward", "sample_events", "superpose",
]
