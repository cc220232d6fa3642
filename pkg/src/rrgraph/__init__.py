"""Right-resolving graph homomorphisms: minimal factors, stability,
synchronizers, bunchy factors and generalized road colouring."""

__version__ = "0.1.0"

from .graph import (
    Edge,
    GraphError,
    GraphFormatError,
    MultiGraph,
    condensation,
    graph_isomorphic,
    higher_edge_graph,
    induced_principal_subgraph,
    is_strongly_connected,
    load_graph,
    period,
    principal_components,
    strong_components,
)
from .homomorphism import (
    GraphHom,
    MinimalFactorResult,
    Partition,
    check_right_resolver,
    compose,
    construct_right_resolver,
    is_congruence,
    minimal_factor,
    parallel_equivalent,
    quotient,
)
from .stability import (
    FiberProduct,
    ImageSet,
    common_sync_extension,
    fiber_product,
    is_synchronizing,
    minimal_images_bruteforce,
    stability_relation,
    synchronizing_word,
    transition,
)
from .bunchy import (
    as_cycle_of_bunches,
    build_O,
    classify,
    max_bunchy_factor,
    og_almost_bunchy,
    stability_of_almost_bunchy,
    verify_universal_property,
)
from .pipeline import (
    ResolverChain,
    decide_og_iso_bfc,
    decide_og_iso_bunchy,
    find_nontrivial_stability,
    in_amalgamation_stable_pair,
    probe_bunchy_factor_conjecture,
    road_colour,
    synchronize_to_cycle_of_bunches,
    tree_analysis,
)

__all__ = [
    "Edge",
    "FiberProduct",
    "GraphError",
    "GraphFormatError",
    "GraphHom",
    "ImageSet",
    "MinimalFactorResult",
    "MultiGraph",
    "Partition",
    "ResolverChain",
    "as_cycle_of_bunches",
    "build_O",
    "check_right_resolver",
    "classify",
    "common_sync_extension",
    "compose",
    "condensation",
    "construct_right_resolver",
    "decide_og_iso_bfc",
    "decide_og_iso_bunchy",
    "fiber_product",
    "find_nontrivial_stability",
    "graph_isomorphic",
    "higher_edge_graph",
    "in_amalgamation_stable_pair",
    "induced_principal_subgraph",
    "is_congruence",
    "is_strongly_connected",
    "is_synchronizing",
    "load_graph",
    "max_bunchy_factor",
    "minimal_factor",
    "minimal_images_bruteforce",
    "og_almost_bunchy",
    "parallel_equivalent",
    "period",
    "principal_components",
    "probe_bunchy_factor_conjecture",
    "quotient",
    "road_colour",
    "stability_of_almost_bunchy",
    "stability_relation",
    "strong_components",
    "synchronize_to_cycle_of_bunches",
    "synchronizing_word",
    "transition",
    "tree_analysis",
    "verify_universal_property",
]
