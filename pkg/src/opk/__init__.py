"""Operads of Feynman graphs, face-complex differentials, graded polynomial
representations and configuration-space weight integrals."""

from .graphs import (
    FeynmanGraph,
    GraphError,
    GraphSum,
    VertexSpec,
    admissible_subsets,
    aerial_graph,
    compose,
    enumerate_graphs,
    make_graph,
    normalize,
    quotient,
    subgraph,
    unit_graph,
)
from .poly import AlgebraSpec, GradedPoly, poisson_algebra, two_pairing_algebra
from .quantize import StarProduct, WeightedGraphOperator, build_mu, ocha_twist, star_product
from .schouten import (
    StructureConstants,
    bernoulli_hatC,
    bernoulli_numbers,
    deformed_bracket,
    gamma_delta,
    mc_residual,
    phi_graph,
    phi_graph_coloured,
    representation_check,
    schouten_bracket,
)
from .trees import TreeSum, corolla, d_squared, differential, from_sexpr, graft, to_sexpr
from .weights import WeightCache, WeightEstimate, snap_rational, stokes_residual, weight

__all__ = [
    "AlgebraSpec", "FeynmanGraph", "GradedPoly", "GraphError", "GraphSum",
    "StarProduct", "StructureConstants", "TreeSum", "VertexSpec", "WeightCache",
    "WeightEstimate", "WeightedGraphOperator", "admissible_subsets",
    "aerial_graph", "bernoulli_hatC", "bernoulli_numbers", "build_mu", "compose",
    "corolla", "d_squared", "deformed_bracket", "differential",
    "enumerate_graphs", "from_sexpr", "gamma_delta", "graft", "make_graph",
    "mc_residual", "normalize", "ocha_twist", "phi_graph", "phi_graph_coloured",
    "poisson_algebra", "quotient", "representation_check", "schouten_bracket",
    "snap_rational", "star_product", "stokes_residual", "subgraph", "to_sexpr",
    "two_pairing_algebra", "unit_graph", "weight",
]

__version__ = "0.1.0"
