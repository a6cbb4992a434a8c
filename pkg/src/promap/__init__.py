"""Process mapping for hierarchical machine topologies.

Assigns the vertices of a weighted task graph to the processing elements
of a machine described by a hierarchy (PEs per node, nodes per rack, ...)
and per-level communication distances, keeping every PE's load within a
configurable imbalance while minimizing the total weighted communication
cost.

Two pipelines are provided: recursive hierarchical multisection
(``hierarchical_multisection``) and an integrated multilevel algorithm
(``integrated_map``) that coarsens once and refines with the topology in
view.  ``MultisectionMapper`` and ``IntegratedMapper`` wrap them in a
scikit-learn style estimator interface.
"""

from .coarsening import LevelStack, build_level_stack, contract, match_graph
from .estimators import IntegratedMapper, MultisectionMapper
from .graph import (
    Graph,
    MetisFormatError,
    as_graph,
    extract_subgraphs,
    from_edge_list,
    gen_grid,
    gen_rgg,
    load_metis,
    write_metis,
)
from .mapping import (
    BlockConnectivity,
    Mapping,
    apply_moves,
    brute_force_map,
    move_gain,
    random_balanced_assignment,
    total_cost,
    undirected_cost,
)
from .pipelines import (
    SplitRecord,
    greedy_graph_growing,
    hierarchical_multisection,
    integrated_map,
    internal_partitioner,
)
from .refinement import (
    BucketList,
    MoveProposal,
    RefinementConfig,
    config_for_level,
    label_propagation_pass,
    refine,
    strong_rebalance,
    weak_rebalance,
)
from .topology import (
    BalanceSpec,
    Topology,
    adaptive_imbalance,
    calc_id,
    distance_matrix,
    flat_topology,
    parse_distances,
    parse_hierarchy,
    pe_distance,
)

__version__ = "0.1.0"

__all__ = [
    "BalanceSpec",
    "BlockConnectivity",
    "BucketList",
    "Graph",
    "IntegratedMapper",
    "LevelStack",
    "Mapping",
    "MetisFormatError",
    "MoveProposal",
    "MultisectionMapper",
    "RefinementConfig",
    "SplitRecord",
    "Topology",
    "adaptive_imbalance",
    "apply_moves",
    "as_graph",
    "brute_force_map",
    "build_level_stack",
    "calc_id",
    "config_for_level",
    "contract",
    "distance_matrix",
    "extract_subgraphs",
    "flat_topology",
    "from_edge_list",
    "gen_grid",
    "gen_rgg",
    "greedy_graph_growing",
    "hierarchical_multisection",
    "integrated_map",
    "internal_partitioner",
    "label_propagation_pass",
    "load_metis",
    "match_graph",
    "move_gain",
    "parse_distances",
    "parse_hierarchy",
    "pe_distance",
    "random_balanced_assignment",
    "refine",
    "strong_rebalance",
    "total_cost",
    "undirected_cost",
    "weak_rebalance",
    "write_metis",
]
