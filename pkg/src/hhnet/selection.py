"""Leave-one-out cross-validation over a smoothing grid, and the bootstrap."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._parallel import pmap
from .likelihood import Penalty, PenalizedObjectiveSpec, IndependencePenalty, log_likelihood
from .network import N_NETWORKS, PartialObservation, config_counts, consistency_matrix, expand_counts
from .optimizer import OptimizationError, OptimizerOptions, maximize

log = logging.getLogger(__name__)

DEFAULT_GRID = tuple(np.round(np.arange(0, 40.0 + 1e-9, 0.5), 10))
DEFAULT_B = 150


class SelectionError(RuntimeError):
    pass


def parse_grid(text: str) -> tuple[float, ...]:
    """Parse ``start:stop:step`` (stop inclusive) or a comma-separated list."""
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        if step <= 0 or stop < start:
            raise ValueError(f"bad grid {text!r}")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(np.round(start + i * step, 10)) for i in range(n))
    return tuple(float(x) for x in text.split(","))


def _check_grid(grid) -> tuple[float, ...]:
    grid = tuple(float(x) for x in grid)
    if not grid:
        raise ValueError("empty lambda grid")
    if any(x < 0 for x in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("lambda grid must be nonnegative and strictly increasing")
    return grid


@dataclass(frozen=True, eq=False)
class CvCurve:
    grid: tuple[float, ...]
    mean_heldout_loglik: np.ndarray
    per_fold: np.ndarray
    complete: np.ndarray
    scale: str = "log"

    @property
    def selected(self) -> float:
        return select_lambda(self)


def heldout_score(p, obs: PartialObservation, scale: str = "log") -> float:
    mass = float(consistency_matrix()[obs.config] @ p)
    if scale == "raw":
        return mass
    return log_likelihood(p, [obs])


def _fold_path(counts: np.ndarray, held: int, grid, penalty: Penalty, opts: OptimizerOptions, scale: str):
    """Scores of held-out configuration ``held`` along the grid, fitting on the rest."""
    rest = counts.copy()
    rest[held] -= 1
    obs = PartialObservation.from_config(held)
    scores = np.full(len(grid), np.nan)
    try:
        pen = penalty.refit(expand_counts(rest))
    except ValueError as exc:
        log.warning("fold %d: cannot build penalty: %s", held, exc)
        pen = penalty
    init = None
    for i, lam in enumerate(grid):
        try:
            fit = maximize(PenalizedObjectiveSpec(rest, lam, pen), init=init, opts=opts)
        except (OptimizationError, ValueError) as exc:
            log.warning("fold %d, lambda %g failed: %s", held, lam, exc)
            continue
        init = fit.p_hat
        scores[i] = heldout_score(fit.p_hat, obs, scale)
    return scores


def loo_cross_validate(
    data: Sequence[PartialObservation],
    grid=DEFAULT_GRID,
    penalty: Penalty | None = None,
    opts: OptimizerOptions | None = None,
    *,
    scale: str = "log",
    jobs: int = 1,
) -> CvCurve:
    """Leave-one-out CV: for each lambda, mean held-out (log-)likelihood.

    Observations sharing a configuration yield identical folds, so one fit per
    distinct configuration and grid point is enough. The independence target
    is recomputed on every training set; if a training set leaves a dyad
    unobserved, the supplied penalty is used as is (so a fitted target acts
    as the fallback). Within a fold, each fit starts from
    the previous grid point's estimate in addition to the default starts.
    """
    data = list(data)
    if len(data) < 2:
        raise ValueError("cross-validation needs at least two observations")
    if scale not in ("log", "raw"):
        raise ValueError(f"scale must be 'log' or 'raw', got {scale!r}")
    grid = _check_grid(grid)
    penalty = penalty if penalty is not None else IndependencePenalty()
    opts = opts or OptimizerOptions()
    counts = config_counts(data)
    held = [int(c) for c in np.flatnonzero(counts)]
    paths = pmap(_fold_path, [(counts, c, grid, penalty, opts, scale) for c in held], jobs)
    by_config = dict(zip(held, paths))
    per_fold = np.array([by_config[obs.config] for obs in data])
    complete = ~np.isnan(per_fold).any(axis=0)
    with np.errstate(invalid="ignore"):
        # weighted by configuration, so the result does not depend on data order
        mean = counts[held] @ np.array(paths) / len(data)
    return CvCurve(grid, mean, per_fold, complete, scale)


def select_lambda(curve: CvCurve) -> float:
    """Grid value maximizing the mean held-out score; ties go to the smaller lambda."""
    ok = curve.complete & np.isfinite(curve.mean_heldout_loglik)
    if not ok.any():
        raise SelectionError("no complete grid point with a finite cross-validation score")
    scores = np.where(ok, curve.mean_heldout_loglik, -np.inf)
    return curve.grid[int(np.argmax(scores))]


@dataclass(frozen=True, eq=False)
class BootstrapResult:
    B: int
    estimates: np.ndarray
    standard_errors: np.ndarray
    failures: int = 0


def _resample_fit(counts, lam, penalty, opts):
    try:
        pen = penalty.refit(expand_counts(counts)) if lam > 0 else penalty
        return maximize(PenalizedObjectiveSpec(counts, lam, pen), opts=opts).p_hat
    except (OptimizationError, ValueError) as exc:
        log.warning("bootstrap resample failed: %s", exc)
        return None


def bootstrap(
    data: Sequence[PartialObservation],
    B: int = DEFAULT_B,
    lam: float = 0.0,
    penalty: Penalty | None = None,
    seed: int = 0,
    opts: OptimizerOptions | None = None,
    *,
    jobs: int = 1,
) -> BootstrapResult:
    """Nonparametric bootstrap of the (penalized) MLE.

    Returns the per-resample estimates and their elementwise sample standard
    deviation (zero when ``B == 1``). Fails if more than 10% of resamples
    cannot be fitted.
    """
    data = list(data)
    if len(data) < 2:
        raise ValueError("bootstrap needs at least two observations")
    if B < 1:
        raise ValueError("B must be at least 1")
    penalty = penalty if penalty is not None else IndependencePenalty()
    opts = opts or OptimizerOptions()
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(data), size=(B, len(data)))
    resamples = [config_counts([data[i] for i in row]) for row in idx]
    fits = pmap(_resample_fit, [(c, lam, penalty, opts) for c in resamples], jobs)
    good = [p for p in fits if p is not None]
    failures = B - len(good)
    if failures > 0.1 * B:
        raise SelectionError(f"{failures} of {B} bootstrap resamples failed")
    est = np.array(good).reshape(-1, N_NETWORKS)
    se = est.std(axis=0, ddof=1) if len(est) > 1 else np.zeros(N_NETWORKS)
    return BootstrapResult(B, est, se, failures)
