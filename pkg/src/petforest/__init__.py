"""Bagged probability-estimation forests with out-of-bag calibrated estimators.

The package grows unpruned bagged trees over stratified bootstraps and layers
three class-probability estimators on top of the shared forests (Laplace
leaf averaging, out-of-bag enhanced leaf estimates, and out-of-bag
conditional matrices), scores them with rank- and likelihood-based metrics,
and benchmarks estimator pairs with paired significance tests.
"""

from .dataset import (
    BootstrapSample,
    Dataset,
    filter_classes,
    holdout_split,
    load_csv,
    stratified_bootstrap,
)
from .ensemble import (
    Ensemble,
    ModelBundle,
    OobClassifications,
    build_ensemble,
    deserialize_model,
    majority_vote,
    oob_classify_training_set,
    serialize_model,
    vote_on_subset,
)
from .errors import DataError, ModelFormatError, PetforestError, UsageError
from .estimators import (
    EstimatorKind,
    EstimatorOptions,
    MobespMatrices,
    ProbEstimate,
    Smoothing,
    bpets_predict,
    build_mobesp_matrices,
    ebpets_leaf_estimate,
    ebpets_predict,
    laplace_estimate,
    m_estimate,
    mobesp_predict,
)
from .harness import (
    DatasetSpec,
    EstimatorSpec,
    ExperimentConfig,
    ExperimentReport,
    TrialResult,
    Verdict,
    WtlCell,
    WtlTable,
    ablation_grid,
    emit_report,
    estimator_preset,
    paired_t_test,
    run_experiment,
    run_trial,
    win_tie_loss_table,
)
from .metrics import (
    MetricReport,
    ScoredSet,
    aulc,
    avg_log_loss,
    clamp_extremes,
    delta_accuracy,
    lift,
    lift_curve,
    zero_one_mse,
)
from .tree import (
    LeafBins,
    SplitTest,
    Tree,
    TreeConfig,
    bin_out_of_bag,
    candidate_thresholds,
    choose_split,
    entropy,
    grow_tree,
    information_gain,
    leaf_majority_class,
    route_to_leaf,
)

__version__ = "0.1.0"
