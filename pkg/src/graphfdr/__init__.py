"""FDR-controlled selection of graph features and persistent cycle groups."""
from .bhq import BhResult, bh_step_up, bh_threshold_sup_oracle
from .estimators import (
    EdgeStatistics,
    PrecisionEstimate,
    debias,
    edge_pvalue,
    filtered_pvalue,
    ggm_edge_statistics,
    graphical_lasso,
    ising_edge_statistics,
    lower_conf_bound,
    normal_cdf,
    normal_quantile,
    sample_covariance,
)
from .features import (
    FeatureShape,
    SelectionResult,
    automorphism_count,
    count_total_candidates,
    enumerate_candidates,
    parse_shape,
    select_features,
)
from .graph import GraphFeature, Scenario, WeightedGraph, feature_embedded, filter_edges
from .homology import (
    CliqueComplex,
    build_clique_complex,
    boundary_matrix,
    complete_complex_cycle_rank,
    complete_graph_cycle_rank,
    cycle_rank,
    exact_rank,
    intersection_cycle_rank,
    rank_increment,
)
from .persistence import PersistenceResult, barcode, dgs, evaluate_at, khan, ufdp

__version__ = "0.1.0"
