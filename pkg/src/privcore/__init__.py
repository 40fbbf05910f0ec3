"""Differentially private metric aggregation on stable cores.

The package filters a dataset down to a "core" of mutually close elements
(so that a single added or removed element cannot drag the aggregate), then
runs a noise-calibrated aggregator on the core.  Shipped aggregators: mean
estimation with known or searched diameter, consensus clustering of k-center
tuples, and covariance estimation for unbounded positive-definite targets.
"""

from .outcomes import BOTTOM, Bottom, is_bottom
from .budgets import (
    BudgetLedger,
    DpBudget,
    ZcdpBudget,
    dp_to_zcdp,
    gaussian_sigma_dp,
    gaussian_sigma_zcdp,
    zcdp_to_dp,
)
from .rng import RandomSource, add_gaussian_noise, add_laplace_noise
from .predicates import (
    DistancePredicate,
    GraphPredicate,
    NotMatchedError,
    Predicate,
    TupleDistancePredicate,
    TupleMatchPredicate,
    eval_dist,
    eval_dist_multi,
    match_gamma,
    ord_by,
)
from .core import (
    CoreSelection,
    FriendCounts,
    basic_filter,
    dp_paradigm_cost,
    friend_counts_exact,
    friend_counts_sampled,
    friendly_core,
    friendly_core_dp,
    min_n_for_completeness,
    zcdp_filter,
)
from .averaging import check_diam, fc_avg, fc_avg_unknown_diam, find_diam, friendly_avg
from .tuples import (
    NotFriendlyError,
    fc_avg_ord_tup,
    fc_k_tuple_clustering,
    friendly_ord_tup_avg,
    friendly_reorder,
    is_good_averages_solution,
)
from .clustering import (
    ClusteringResult,
    fc_clustering,
    kmeans_cost,
    kmeans_pp,
    labeling_accuracy,
    noisy_lloyd_step,
    pca_gmm_cluster,
)
from .covariance import (
    MatrixClosenessPredicate,
    b_eta,
    fc_covariance,
    fc_covariance_from_pieces,
    empirical_cov_pieces,
    friendly_covariance,
    gamma_threshold,
    matrix_dist,
    sym_eigen,
)
from .datagen import gen_gaussian_cloud, gen_mixture
from .experiments import ExperimentSpec, run_experiment, trimmed_mean

__version__ = "0.1.0"
