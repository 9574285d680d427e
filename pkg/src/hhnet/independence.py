"""Dyad-independence baseline model and its confidence intervals."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .network import DYAD_NAMES, N_DYADS, N_NETWORKS, PartialObservation, index_to_vector


class UnobservedDyadError(ValueError):
    """Raised when no observation reports on some dyad."""

    def __init__(self, dyads):
        self.dyads = tuple(dyads)
        names = ", ".join(DYAD_NAMES[j] for j in self.dyads)
        super().__init__(f"unobserved dyad(s): {names}; no respondent reports on them")


@dataclass(frozen=True)
class DyadProbabilities:
    eta: np.ndarray
    successes: np.ndarray
    trials: np.ndarray

    def intervals(self, level: float = 0.95) -> tuple[np.ndarray, np.ndarray]:
        """Per-dyad exact binomial bounds ``(low, high)``."""
        bounds = [exact_binomial_ci(int(s), int(t), level) for s, t in zip(self.successes, self.trials)]
        low, high = np.array(bounds).T
        return low, high


def independence_mle(data: Sequence[PartialObservation]) -> DyadProbabilities:
    """Per-dyad binomial MLE: share of reports on each dyad that are contacts."""
    successes = np.zeros(N_DYADS, dtype=int)
    trials = np.zeros(N_DYADS, dtype=int)
    for obs in data:
        for j, v in obs.reports:
            trials[j] += 1
            successes[j] += v
    missing = np.flatnonzero(trials == 0)
    if missing.size:
        raise UnobservedDyadError(missing.tolist())
    return DyadProbabilities(successes / trials, successes, trials)


def _design() -> np.ndarray:
    return np.array([index_to_vector(k) for k in range(N_NETWORKS)], dtype=float)


_Z = _design()


def product_distribution(eta) -> np.ndarray:
    """Network probabilities when dyads are independent Bernoulli(eta_j)."""
    eta = np.asarray(getattr(eta, "eta", eta), dtype=float)
    if eta.shape != (N_DYADS,) or np.any(eta < 0) or np.any(eta > 1):
        raise ValueError(f"eta must be 6 values in [0, 1], got {eta}")
    return np.prod(np.where(_Z == 1, eta, 1 - eta), axis=1)


def exact_binomial_ci(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Clopper-Pearson interval for a binomial proportion."""
    if trials < 1 or not 0 <= successes <= trials:
        raise ValueError(f"invalid counts: {successes} successes in {trials} trials")
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    alpha = 1 - level
    s, t = successes, trials
    low = 0.0 if s == 0 else float(stats.beta.ppf(alpha / 2, s, t - s + 1))
    high = 1.0 if s == t else float(stats.beta.ppf(1 - alpha / 2, s + 1, t - s))
    return low, high


def conservative_network_ci(eta_low, eta_high, z: Sequence[int]) -> tuple[float, float]:
    """Interval for one network's probability from per-dyad bounds.

    Every dyad takes whichever end of its interval makes the product smallest
    (``low``) or largest (``high``).
    """
    eta_low = np.asarray(eta_low, dtype=float)
    eta_high = np.asarray(eta_high, dtype=float)
    z = np.asarray(z)
    if np.any(eta_low > eta_high):
        raise ValueError("crossed bounds: eta_low exceeds eta_high")
    if np.any(eta_low < 0) or np.any(eta_high > 1):
        raise ValueError("bounds must lie in [0, 1]")
    low = np.prod(np.where(z == 1, eta_low, 1 - eta_high))
    high = np.prod(np.where(z == 1, eta_high, 1 - eta_low))
    return float(low), float(high)


def network_intervals(dyads: DyadProbabilities, level: float = 0.95) -> np.ndarray:
    """64 x 2 array of conservative intervals for every network."""
    lo, hi = dyads.intervals(level)
    return np.array([conservative_network_ci(lo, hi, z) for z in _Z.astype(int)])
