"""Exponential-moment bounds for stationary multivariate linear Hawkes processes.

The bounds depend on the interaction matrix of kernel L1 norms only. The
package computes them, certifies the geometric decay of the matrix powers they
need, and checks them by Monte Carlo against two independent simulators.
"""

from hawkesbound.errors import (
    Diverged,
    HawkesBoundError,
    HorizonExceeded,
    InsufficientSamples,
    NodeCapExceeded,
    NonConvergence,
    OutOfRange,
    RateCapExceeded,
    SubcriticalityViolated,
)
from hawkesbound.spectral import (
    BoundConstants,
    GeCertificate,
    InteractionMatrix,
    bound_constants,
    ge_certificate,
    operator_norm_inf,
    optimize_xi,
    spectral_radius,
)
from hawkesbound.gwtree import (
    TypedTree,
    borel_progeny_pmf,
    gw_mgf_bound,
    gw_mgf_limit,
    gw_mgf_recursion,
    sample_gw_tree,
    univariate_optimal_xi,
)
from hawkesbound.model import HawkesModel, KernelSpec
from hawkesbound.clustersim import (
    Cluster,
    EventSequence,
    burn_in_check,
    choose_burn_in,
    cluster_count,
    sample_cluster,
    simulate_window,
    simulate_windows,
)
from hawkesbound.thinning import simulate_thinning, simulate_thinning_windows
from hawkesbound.verify import (
    BoundReport,
    MgfEstimate,
    PiecewiseFn,
    estimate_mgf,
    f_fold_norm,
    functional_bound,
    run_verification,
    theorem_bound,
    theorem_bound_rewritten,
    verdict,
)

__version__ = "0.1.0"
