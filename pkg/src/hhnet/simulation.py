"""Monte Carlo study of estimator error across a smoothing grid."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._parallel import pmap
from .independence import independence_mle, product_distribution
from .likelihood import IndependencePenalty, Penalty, PenalizedObjectiveSpec, check_simplex
from .network import N_NETWORKS, PartialObservation, Role
from .optimizer import OptimizationError, OptimizerOptions, maximize

log = logging.getLogger(__name__)

# respondent mix observed for households with two 0-5 year olds (C1, C2, A1, A2)
PAPER_FREQUENCY = (6, 17, 4, 3)
INDEPENDENCE_GRID = tuple(0.5 * i for i in range(101))
ADJACENCY_GRID = tuple(0.25 * i for i in range(41))

COMPLETE = 63
ELDER_CHILD_ISOLATE = 38  # C1-A1, C1-A2, A1-A2 present; C2 has no contacts
SCENARIO_ETA = (0.85, 0.9, 0.85, 0.75, 0.75, 0.65)

Fitter = Callable[[Sequence[PartialObservation], float, Penalty], np.ndarray]


@dataclass(frozen=True)
class RespondentFrequency:
    counts: tuple[int, int, int, int]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) != 4 or any(c < 0 for c in counts):
            raise ValueError(f"need four nonnegative role counts, got {self.counts}")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return sum(self.counts)

    def roles(self) -> list[Role]:
        return [role for role, c in zip(Role, self.counts) for _ in range(c)]


def independent_scenario(eta=SCENARIO_ETA) -> np.ndarray:
    return product_distribution(np.asarray(eta, dtype=float))


def dependent_scenario(complete: float = 0.65, isolate: float = 0.12, eta=SCENARIO_ETA) -> np.ndarray:
    """Young-household truth: heavy mass on the complete network and on the
    network where the older child is an isolate, the remainder spread as a
    product distribution over the other 62 networks."""
    rest = product_distribution(np.asarray(eta, dtype=float))
    rest[[COMPLETE, ELDER_CHILD_ISOLATE]] = 0
    p = rest / rest.sum() * (1 - complete - isolate)
    p[COMPLETE] = complete
    p[ELDER_CHILD_ISOLATE] = isolate
    return p


SCENARIOS = {"dependent": dependent_scenario, "independent": independent_scenario}


def simulate_sample(p_true, n: int, freq: RespondentFrequency, rng: np.random.Generator) -> list[PartialObservation]:
    """Draw ``n`` households from ``p_true`` and mask each to one respondent.

    Respondent roles are a random permutation of the multiset given by
    ``freq``, so every sample has exactly those role counts.
    """
    p_true = check_simplex(p_true)
    if freq.n != n:
        raise ValueError(f"role counts sum to {freq.n}, expected n = {n}")
    networks = rng.choice(N_NETWORKS, size=n, p=p_true / p_true.sum())
    roles = rng.permutation(np.array(freq.roles(), dtype=int))
    return [PartialObservation.from_network(int(k), Role(int(r))) for k, r in zip(networks, roles)]


@dataclass(frozen=True, eq=False)
class StudyConfig:
    p_true: np.ndarray
    n: int
    freq: RespondentFrequency
    S: int = 200
    grid: tuple[float, ...] = INDEPENDENCE_GRID
    penalty: Penalty = field(default_factory=IndependencePenalty)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "p_true", check_simplex(self.p_true))
        object.__setattr__(self, "grid", tuple(float(x) for x in self.grid))
        if self.S < 1:
            raise ValueError("S must be at least 1")
        if self.freq.n != self.n:
            raise ValueError(f"role counts sum to {self.freq.n}, expected n = {self.n}")
        if not self.grid or any(x < 0 for x in self.grid):
            raise ValueError("grid must be a nonempty list of nonnegative values")


@dataclass(frozen=True, eq=False)
class StudyMetrics:
    grid: tuple[float, ...]
    mse: np.ndarray
    mean_sq_bias: np.ndarray
    signed_bias: np.ndarray
    variance: np.ndarray
    mean_estimate: np.ndarray
    failures: np.ndarray
    independence_mean: np.ndarray

    @property
    def complete(self) -> np.ndarray:
        return self.failures == 0

    def rows(self):
        for i, lam in enumerate(self.grid):
            yield [lam, self.mse[i], self.mean_sq_bias[i], self.signed_bias[i], self.variance[i], *self.mean_estimate[i]]


CSV_COLUMNS = ["lambda", "mse", "mean_sq_bias", "signed_bias", "variance"] + [
    f"p_mean_{k}" for k in range(N_NETWORKS)
]


def default_fitter(opts: OptimizerOptions | None = None) -> Fitter:
    def fit(data, lam, penalty):
        pen = penalty.refit(data) if lam > 0 else penalty
        return maximize(PenalizedObjectiveSpec(data, lam, pen), opts=opts).p_hat

    return fit


def _sample_fits(config: StudyConfig, s: int, fitter: Fitter | None, opts):
    rng = np.random.default_rng([config.seed, s])
    data = simulate_sample(config.p_true, config.n, config.freq, rng)
    fitter = fitter or default_fitter(opts)
    est = np.full((len(config.grid), N_NETWORKS), np.nan)
    for i, lam in enumerate(config.grid):
        try:
            est[i] = fitter(data, lam, config.penalty)
        except (OptimizationError, ValueError) as exc:
            log.warning("sample %d, lambda %g failed: %s", s, lam, exc)
    try:
        indep = product_distribution(independence_mle(data))
    except ValueError:
        indep = np.full(N_NETWORKS, np.nan)
    return est, indep


def summarize(estimates: np.ndarray, p_true) -> tuple[np.ndarray, ...]:
    """Error decomposition of an ``S x G x 64`` array of estimates.

    Returns ``(mse, mean_sq_bias, signed_bias, variance, mean_estimate)`` per
    grid point, averaging over the 64 probabilities; variance uses the
    population (divide by S) convention so ``mse == mean_sq_bias + variance``.
    Samples with failed fits (NaN rows) are dropped per grid point.
    """
    p_true = np.asarray(p_true, dtype=float)
    n_grid = estimates.shape[1]
    out = np.full((5, n_grid), np.nan)
    mean_est = np.full((n_grid, N_NETWORKS), np.nan)
    for i in range(n_grid):
        est = estimates[:, i, :]
        est = est[~np.isnan(est).any(axis=1)]
        if not len(est):
            continue
        pbar = est.mean(axis=0)
        out[0, i] = np.mean(np.mean((est - p_true) ** 2, axis=0))
        out[1, i] = np.mean((pbar - p_true) ** 2)
        out[2, i] = np.mean(pbar - p_true)
        out[3, i] = np.mean(np.mean((est - pbar) ** 2, axis=0))
        mean_est[i] = pbar
    return out[0], out[1], out[2], out[3], mean_est


def run_study(
    config: StudyConfig,
    fitter: Fitter | None = None,
    opts: OptimizerOptions | None = None,
    *,
    jobs: int = 1,
) -> StudyMetrics:
    """Fit every simulated sample at every grid value and decompose the error.

    Each sample draws from its own generator seeded by ``(config.seed, s)``,
    so results do not depend on how the work is scheduled.
    """
    results = pmap(_sample_fits, [(config, s, fitter, opts) for s in range(config.S)], jobs)
    estimates = np.array([r[0] for r in results])
    indep = np.array([r[1] for r in results])
    failures = np.isnan(estimates).any(axis=2).sum(axis=0)
    mse, msb, sb, var, mean_est = summarize(estimates, config.p_true)
    ok = ~np.isnan(indep).any(axis=1)
    indep_mean = indep[ok].mean(axis=0) if ok.any() else np.full(N_NETWORKS, np.nan)
    return StudyMetrics(config.grid, mse, msb, sb, var, mean_est, failures, indep_mean)
