"""Best-policy selection in stochastic bandits with KL-barycenter behavior policies.

A single behavior policy, the arithmetic mean of the targets, is used to
estimate every target's value by importance sampling. Clustering the
targets first (Hellinger k-means) and sampling under one barycenter per
cluster keeps the importance weights small.
"""

from .bandit import (
    BanditModel,
    Bernoulli,
    Deterministic,
    Gaussian,
    RngState,
    Samples,
    draw,
    draw_many,
    mean_reward,
    policy_value,
    stream_id_for,
    subgaussian_param,
)
from .bounds import (
    BoundInputs,
    LowerBoundInstance,
    expected_regret_bound,
    lower_bound_model,
    lower_bound_prob,
    measured_eta,
    sample_size_ckl,
    sample_size_cluster_gate,
    sample_size_klpe,
    sigma_bound_from_eta,
    sigma_safe_bound,
    sigma_safe_bound_sqrt_eta,
    uniform_limit_deviation,
)
from .clustering import (
    ClusterAssignment,
    ClusteredDesign,
    cluster_barycenters,
    hellinger_kmeans,
    improvement_holds,
    kmeans,
    sqrt_embed,
)
from .errors import (
    CKLPEError,
    ConfigError,
    DivergenceInfiniteError,
    InvalidArgumentError,
    PreconditionError,
    StrictPositivityError,
    SupportViolationError,
)
from .estimators import (
    Dataset,
    EstimateTable,
    SelectionResult,
    allocate_samples,
    clustered_estimates,
    collect_dataset,
    is_estimate,
    kl_pe,
    mc_estimate,
    regret,
    select_best,
    true_values,
)
from .harness import (
    CSV_HEADER,
    ExperimentConfig,
    RunRecord,
    emit_csv,
    generate_testbed,
    load_config,
    parse_config,
    read_csv,
    read_testbed,
    run_single,
    run_sweep,
    write_testbed,
)
from .policy import (
    as_policy,
    as_policy_set,
    average_right_kl,
    entropy,
    hellinger_sq,
    kl_barycenter,
    kl_divergence,
    max_importance_weight,
    safe_mix,
    softmax_from_weights,
    uniform_policy,
)

__version__ = "0.1.0"
