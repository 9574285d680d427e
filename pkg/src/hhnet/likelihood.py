"""Observed-data log-likelihood, smoothing penalties and the penalized objective.

Observations enter only through their configuration counts, so every function
here accepts either a list of :class:`PartialObservation` or a precomputed
length-32 count vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .independence import independence_mle, product_distribution
from .network import (
    N_CONFIGS,
    N_NETWORKS,
    PartialObservation,
    adjacency_pairs,
    config_counts,
    consistency_matrix,
    expand_counts,
    exchangeability_pairs,
    pair_laplacian,
)

INTERIOR_EPS = 1e-10


def _counts(data) -> np.ndarray:
    if isinstance(data, np.ndarray) and data.shape == (N_CONFIGS,):
        return data
    return config_counts(data)


def check_simplex(p, tol: float = 1e-10) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (N_NETWORKS,):
        raise ValueError(f"probability vector must have 64 entries, got shape {p.shape}")
    if np.any(p < -tol) or abs(p.sum() - 1) > tol:
        raise ValueError("not a probability vector: entries must be >= 0 and sum to 1")
    return p


def log_likelihood(p, data) -> float:
    """Sum over observations of log of the mass consistent with each report.

    Returns ``-inf`` when some observation has no consistent mass.
    """
    counts = _counts(data)
    if counts.sum() == 0:
        raise ValueError("log-likelihood needs at least one observation")
    mass = consistency_matrix() @ np.asarray(p, dtype=float)
    seen = counts > 0
    with np.errstate(divide="ignore"):
        return float(counts[seen] @ np.log(mass[seen]))


def hellinger_penalty(p, q) -> float:
    """Squared Hellinger distance ``0.5 * sum (sqrt q - sqrt p)**2``."""
    p = np.clip(np.asarray(p, dtype=float), 0, None)
    q = np.clip(np.asarray(q, dtype=float), 0, None)
    return float(0.5 * np.sum((np.sqrt(q) - np.sqrt(p)) ** 2))


@lru_cache(maxsize=None)
def _laplacian(kind: str) -> np.ndarray:
    pairs = adjacency_pairs() if kind == "adjacency" else exchangeability_pairs()
    lap = pair_laplacian(pairs)
    lap.setflags(write=False)
    return lap


@lru_cache(maxsize=None)
def _pair_index(kind: str) -> tuple[np.ndarray, np.ndarray]:
    pairs = np.array(adjacency_pairs() if kind == "adjacency" else exchangeability_pairs())
    return pairs[:, 0], pairs[:, 1]


def _pair_sum(p, kind: str) -> float:
    i, j = _pair_index(kind)
    p = np.asarray(p, dtype=float)
    return float(np.sum((p[i] - p[j]) ** 2))


def adjacency_penalty(p) -> float:
    """Sum of squared differences over networks one dyad apart."""
    return _pair_sum(p, "adjacency")


def exchangeability_penalty(p) -> float:
    """Sum of squared differences over networks related by child/adult swaps."""
    return _pair_sum(p, "exchangeability")


class Penalty:
    """Base class for smoothing penalties.

    Subclasses supply the value and the p-space gradient and Hessian.
    """

    name = "none"

    def value(self, p) -> float:
        raise NotImplementedError

    def grad(self, p) -> np.ndarray:
        raise NotImplementedError

    def hess(self, p) -> np.ndarray:
        raise NotImplementedError

    def refit(self, data) -> Penalty:
        """Penalty to use when the data change (folds, resamples)."""
        return self


@dataclass(frozen=True, eq=False)
class IndependencePenalty(Penalty):
    """Squared Hellinger distance to a dyad-independence target.

    With ``target=None`` the target is unknown until :meth:`refit` derives it
    from data.
    """

    target: np.ndarray | None = None
    name = "independence"

    def __post_init__(self):
        if self.target is not None:
            t = check_simplex(self.target).copy()
            t.setflags(write=False)
            object.__setattr__(self, "target", t)
            object.__setattr__(self, "_sqrt_target", np.sqrt(np.clip(t, 0, None)))

    @classmethod
    def from_data(cls, data) -> IndependencePenalty:
        return cls(product_distribution(independence_mle(data)))

    def refit(self, data) -> IndependencePenalty:
        return IndependencePenalty.from_data(data)

    def _require_target(self):
        if self.target is None:
            raise ValueError("independence penalty has no target; call refit(data) first")

    def value(self, p) -> float:
        self._require_target()
        return hellinger_penalty(p, self.target)

    def grad(self, p) -> np.ndarray:
        self._require_target()
        sp = np.sqrt(p)
        return -(self._sqrt_target - sp) / (2 * sp)

    def hess(self, p) -> np.ndarray:
        self._require_target()
        return np.diag(self._sqrt_target / (4 * np.asarray(p, dtype=float) ** 1.5))

    def __repr__(self):
        return "IndependencePenalty(target=None)" if self.target is None else "IndependencePenalty(<fitted>)"


class _QuadraticPenalty(Penalty):
    def value(self, p) -> float:
        return _pair_sum(p, self.name)

    def grad(self, p) -> np.ndarray:
        return 2 * (_laplacian(self.name) @ p)

    def hess(self, p) -> np.ndarray:
        return 2 * _laplacian(self.name)

    def __eq__(self, other):
        return type(self) is type(other)

    def __hash__(self):
        return hash(type(self))

    def __repr__(self):
        return f"{type(self).__name__}()"


class AdjacencyPenalty(_QuadraticPenalty):
    name = "adjacency"


class ExchangeabilityPenalty(_QuadraticPenalty):
    name = "exchangeability"


PENALTIES = {
    "independence": IndependencePenalty,
    "adjacency": AdjacencyPenalty,
    "exchangeability": ExchangeabilityPenalty,
}


def make_penalty(name: str, data=None) -> Penalty:
    """Build a penalty by name; the independence target is fitted to ``data`` if given."""
    try:
        cls = PENALTIES[name]
    except KeyError:
        raise ValueError(f"unknown penalty {name!r}; choose from {sorted(PENALTIES)}") from None
    pen = cls()
    return pen.refit(data) if data is not None else pen


@dataclass(frozen=True, eq=False)
class PenalizedObjectiveSpec:
    """Data, smoothing weight and penalty defining ``PL(p) = logL(p) - lam * penalty(p)``."""

    data: Sequence[PartialObservation] | np.ndarray
    lam: float
    penalty: Penalty = field(default_factory=IndependencePenalty)

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")
        counts = _counts(self.data).copy()
        if counts.sum() == 0:
            raise ValueError("objective needs at least one observation")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        if isinstance(self.penalty, IndependencePenalty) and self.penalty.target is None and self.lam > 0:
            object.__setattr__(self, "penalty", self.penalty.refit(expand_counts(counts)))

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    def with_lambda(self, lam: float) -> PenalizedObjectiveSpec:
        return PenalizedObjectiveSpec(self.counts, lam, self.penalty)


def penalized_objective(p, spec: PenalizedObjectiveSpec) -> float:
    ll = log_likelihood(p, spec.counts)
    if spec.lam == 0:
        return ll
    return ll - spec.lam * spec.penalty.value(p)


def objective_gradient(p, spec: PenalizedObjectiveSpec) -> np.ndarray:
    """Gradient of the penalized objective with respect to the 64 probabilities.

    Only defined on the interior: every ``p_k`` must be at least ``1e-10``.
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (N_NETWORKS,) or np.any(p < INTERIOR_EPS):
        raise ValueError("gradient requires p strictly inside the simplex (all p_k >= 1e-10)")
    a = consistency_matrix()
    g = a.T @ (spec.counts / (a @ p))
    if spec.lam:
        g = g - spec.lam * spec.penalty.grad(p)
    return g
