"""Differentiable persistent homology for level-set and edge-based filtrations."""

from .backprop import (
    DegenerateGradientWarning,
    FDResult,
    diagram_to_simplex_grad,
    finite_difference_check,
    lower_star_objective,
    point_cloud_objective,
    simplex_to_point_grad,
    simplex_to_vertex_grad,
)
from .complex import (
    DegenerateInputError,
    SimplicialComplex,
    betti_oracle,
    build_clique_complex,
    build_freudenthal_grid,
    delaunay_2d,
)
from .diagram import (
    DiagramGradient,
    DomainError,
    LossSpec,
    LossTerm,
    parse_objective,
    polynomial_loss,
    wasserstein,
    wasserstein_brute_force,
)
from .filtration import (
    Filtration,
    directional_filtrations,
    flag,
    lower_star,
    rips_filtration,
    weak_alpha_filtration,
)
from .persistence import (
    InternalConsistencyError,
    PersistenceDiagram,
    PersistencePair,
    compute_persistence,
    pd0_union_find,
    reduce,
)

__version__ = "0.1.0"
