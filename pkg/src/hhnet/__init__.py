"""Penalized likelihood estimation of four-person household contact networks
from egocentric (one respondent per household) reports."""

__version__ = "0.1.0"

from .independence import (
    DyadProbabilities,
    UnobservedDyadError,
    conservative_network_ci,
    exact_binomial_ci,
    independence_mle,
    network_intervals,
    product_distribution,
)
from .likelihood import (
    AdjacencyPenalty,
    ExchangeabilityPenalty,
    IndependencePenalty,
    PenalizedObjectiveSpec,
    log_likelihood,
    make_penalty,
    objective_gradient,
    penalized_objective,
)
from .network import (
    DYAD_LABELS,
    PartialObservation,
    Role,
    consistency_matrix,
    distinct_configurations,
    exchangeability_orbits,
    index_to_vector,
    vector_to_index,
)
from .optimizer import (
    FitResult,
    OptimizerOptions,
    fisher_standard_errors,
    hessian_rank,
    maximize,
)
from .selection import bootstrap, loo_cross_validate, select_lambda
from .simulation import RespondentFrequency, StudyConfig, run_study, simulate_sample
