"""Maximization of the penalized likelihood over the 64-simplex.

Probabilities are floored at ``EPS`` and the remaining mass is a softmax of
63 log-ratios against network 0:

    p = EPS + (1 - 64 EPS) * s,   s_0 = 1 / (1 + sum_m exp(theta_m)),   s_k = exp(theta_k) s_0.

The objective is maximized in ``theta`` with BFGS. Softmax coordinates never
reach the boundary, so after each BFGS run networks whose weight has collapsed
are fixed at the floor and the rest are re-optimized, until the KKT
conditions hold. The penalized log-likelihood is concave in ``p`` for every
penalty, so a point satisfying them is a global maximum.

Observed information, standard errors and the rank diagnostic are computed in
``theta`` coordinates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .independence import UnobservedDyadError, independence_mle, product_distribution
from .likelihood import INTERIOR_EPS, Penalty, PenalizedObjectiveSpec
from .network import N_NETWORKS, consistency_matrix, expand_counts

log = logging.getLogger(__name__)

N_FREE = N_NETWORKS - 1
EPS = INTERIOR_EPS
SCALE = 1.0 - N_NETWORKS * EPS

_DROP_WEIGHT = 1e-6  # softmax weight below which a coordinate may be fixed at the floor
_RELEASE_WEIGHT = 1e-6
_MAX_ROUNDS = 20
_NEWTON_ITER = 100
_LOG_TINY = -700.0


class OptimizationError(RuntimeError):
    """Raised when no start produces a finite optimum."""


class NotConvergedError(ValueError):
    """Raised when a diagnostic needs a converged fit."""


@dataclass(frozen=True)
class OptimizerOptions:
    """Stopping rules and start schedule for :func:`maximize`.

    ``kkt_tol`` is relative to the Lagrange multiplier of the sum-to-one
    constraint. With ``early_stop`` the start schedule ends at the first start
    whose optimum passes the KKT check.
    """

    gtol: float = 1e-8
    ftol: float = 1e-12
    max_iter: int = 5000
    n_starts: int = 5
    seed: int = 0
    kkt_tol: float = 1e-6
    early_stop: bool = True


@dataclass(frozen=True, eq=False)
class FitResult:
    p_hat: np.ndarray
    objective_value: float
    converged: bool
    iterations: int
    gradient_norm: float
    lam: float
    penalty: Penalty
    theta: np.ndarray = field(repr=False)
    at_floor: np.ndarray = field(repr=False, default=None)
    kkt_satisfied: bool = False
    n_starts: int = 1


@dataclass(frozen=True, eq=False)
class UncertaintyResult:
    standard_errors: np.ndarray | None
    info_matrix_rank: int
    invertible: bool
    information: np.ndarray = field(repr=False)


def _softmax(z) -> np.ndarray:
    w = np.exp(z - z.max())
    return w / w.sum()


def theta_to_p(theta) -> np.ndarray:
    s = _softmax(np.concatenate(([0.0], np.asarray(theta, dtype=float))))
    return EPS + SCALE * s


def p_to_theta(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (N_NETWORKS,):
        raise ValueError("log-ratio coordinates need a 64-vector")
    s = (p - EPS) / SCALE
    if np.any(s <= 0):
        raise ValueError(f"log-ratio coordinates need every p_k > {EPS}")
    ls = np.log(s)
    return ls[1:] - ls[0]


def interior(p, eps: float = INTERIOR_EPS) -> np.ndarray:
    """Clip to ``eps`` and renormalize."""
    p = np.clip(np.asarray(p, dtype=float), eps, None)
    return p / p.sum()


def _weights(p) -> np.ndarray:
    """Softmax weights of a probability vector, clipped into the interior."""
    s = np.clip((np.asarray(p, dtype=float) - EPS) / SCALE, 1e-12, None)
    return s / s.sum()


class _Objective:
    """Penalized log-likelihood and its p-space gradient, evaluated on ``p >= EPS``."""

    def __init__(self, spec: PenalizedObjectiveSpec):
        seen = spec.counts > 0
        self.a = consistency_matrix()[seen]
        self.counts = spec.counts[seen]
        self.lam = float(spec.lam)
        self.penalty = spec.penalty

    def value(self, p) -> float:
        mass = self.a @ p
        if np.any(mass <= 0):
            return -np.inf
        f = self.counts @ np.log(mass)
        if self.lam:
            f -= self.lam * self.penalty.value(p)
        return float(f)

    def grad(self, p) -> np.ndarray:
        g = self.a.T @ (self.counts / (self.a @ p))
        if self.lam:
            g = g - self.lam * self.penalty.grad(p)
        return g

    def hess(self, p) -> np.ndarray:
        w = self.counts / (self.a @ p) ** 2
        h = -(self.a.T * w) @ self.a
        if self.lam:
            h -= self.lam * self.penalty.hess(p)
        return h


class _Reduced:
    """Minimization problem over the softmax weights of a free subset of networks.

    Variables are log-ratios of the free weights against the free network
    ``anchor``; weights outside ``free`` are zero.
    """

    def __init__(self, obj: _Objective, free: np.ndarray, anchor: int):
        self.obj = obj
        self.free = free
        self.anchor = anchor
        self.others = free[free != anchor]

    def weights(self, x) -> np.ndarray:
        z = np.concatenate(([0.0], x))
        s = np.zeros(N_NETWORKS)
        s[np.concatenate(([self.anchor], self.others))] = _softmax(z)
        return s

    def to_x(self, s) -> np.ndarray:
        return np.log(s[self.others]) - np.log(s[self.anchor])

    def value(self, x) -> float:
        return -self.obj.value(EPS + SCALE * self.weights(x))

    def value_and_grad(self, x):
        s = self.weights(x)
        p = EPS + SCALE * s
        f = self.obj.value(p)
        if not np.isfinite(f):
            return np.inf, None
        g = self.obj.grad(p)
        dx = SCALE * s * (g - s @ g)
        return -f, -dx[self.others]

    def hessian(self, x) -> np.ndarray:
        """Hessian of the minimized (negated) objective in ``x``."""
        s = self.weights(x)
        p = EPS + SCALE * s
        g = self.obj.grad(p)
        u = s * (g - s @ g)
        jac = np.diag(s) - np.outer(s, s)
        h = SCALE**2 * (jac @ self.obj.hess(p) @ jac) + SCALE * (np.diag(u) - np.outer(u, s) - np.outer(s, u))
        idx = self.others
        return -h[np.ix_(idx, idx)]


def _bfgs(fun, x0: np.ndarray, opts: OptimizerOptions):
    """BFGS with backtracking Armijo steps.

    Stops when the gradient sup-norm reaches ``gtol``, an accepted step
    changes the objective by at most ``ftol``, or after ``max_iter``
    iterations. Returns ``(x, f, g, iterations, converged)``.
    """
    x = x0.copy()
    f, g = fun.value_and_grad(x)
    if g is None:
        return x, f, None, 0, False
    n = x.size
    if n == 0:
        return x, f, g, 0, True
    h = np.eye(n)
    scaled = False
    for it in range(1, opts.max_iter + 1):
        gmax = np.max(np.abs(g))
        if gmax <= opts.gtol:
            return x, f, g, it - 1, True
        d = -h @ g
        slope = g @ d
        if slope >= 0:
            h = np.eye(n)
            scaled = False
            d = -g
            slope = -(g @ g)
        step = 1.0 if scaled else min(1.0, 1.0 / gmax)
        for _ in range(60):
            x_new = x + step * d
            f_new, g_new = fun.value_and_grad(x_new)
            if g_new is not None and f_new <= f + 1e-4 * step * slope:
                break
            step *= 0.5
        else:
            return x, f, g, it, False
        s = x_new - x
        y = g_new - g
        sy = s @ y
        if sy > 1e-12 * np.sqrt((s @ s) * (y @ y)):
            if not scaled:
                h = (sy / (y @ y)) * np.eye(n)
                scaled = True
            hy = h @ y
            rho = 1.0 / sy
            v = rho * s
            h += ((1.0 + rho * (y @ hy)) * v)[:, None] * s - v[:, None] * hy - hy[:, None] * v
        delta = f - f_new
        x, f, g = x_new, f_new, g_new
        if abs(delta) <= opts.ftol:
            return x, f, g, it, True
    return x, f, g, opts.max_iter, bool(np.max(np.abs(g)) <= opts.gtol)


def _newton(fun: _Reduced, x: np.ndarray, opts: OptimizerOptions, max_iter: int = 100):
    """Damped Newton refinement of a BFGS solution with the analytic Hessian.

    Returns ``(x, f, g, iterations, converged)`` like :func:`_bfgs`.
    """
    f, g = fun.value_and_grad(x)
    if x.size == 0:
        return x, f, g, 0, True
    for it in range(max_iter):
        if np.max(np.abs(g)) <= opts.gtol:
            return x, f, g, it, True
        h = fun.hessian(x)
        shift = 0.0
        diag_scale = max(np.max(np.abs(np.diag(h))), 1e-300)
        while True:
            try:
                chol = np.linalg.cholesky(h + shift * np.eye(x.size))
                break
            except np.linalg.LinAlgError:
                shift = max(4 * shift, 1e-12 * diag_scale)
        d = -np.linalg.solve(chol.T, np.linalg.solve(chol, g))
        slope = g @ d
        step = 1.0
        for _ in range(60):
            x_new = x + step * d
            f_new, g_new = fun.value_and_grad(x_new)
            if g_new is not None and f_new <= f + 1e-4 * step * slope:
                break
            step *= 0.5
        else:
            return x, f, g, it, False
        x, f, g = x_new, f_new, g_new
    return x, f, g, max_iter, bool(np.max(np.abs(g)) <= opts.gtol)


def _kkt(obj: _Objective, s: np.ndarray, free: np.ndarray, opts: OptimizerOptions):
    """Multiplier, gradient and tolerance for the KKT check at weights ``s``."""
    g = obj.grad(EPS + SCALE * s)
    mu = float(s @ g)
    return mu, g, opts.kkt_tol * max(1.0, abs(mu))


def _active_set_bfgs(obj: _Objective, s0: np.ndarray, opts: OptimizerOptions):
    """BFGS over free weights, fixing collapsed networks at the floor until KKT holds.

    After each run, a network with negligible weight is fixed at the floor if
    its gradient is clearly below the multiplier, and given weight again if
    its gradient is clearly above it (softmax gradients vanish there, so BFGS
    alone cannot move it). A network given weight again is never refixed.
    """
    s = s0.copy()
    free = np.flatnonzero(s > 0)
    sticky = np.zeros(N_NETWORKS, bool)
    total_iters = 0
    for _ in range(_MAX_ROUNDS):
        anchor = int(free[np.argmax(s[free])])
        red = _Reduced(obj, free, anchor)
        budget = replace(opts, max_iter=max(opts.max_iter - total_iters, 0))
        x, fneg, gx, iters, ok = _bfgs(red, red.to_x(s), budget)
        total_iters += iters
        if gx is not None and gx.size and np.max(np.abs(gx)) > opts.gtol and total_iters < opts.max_iter:
            x, fneg, gx, iters, ok = _newton(red, x, opts, min(_NEWTON_ITER, opts.max_iter - total_iters))
            total_iters += iters
        if gx is None:
            return s, -np.inf, np.inf, total_iters, False, False
        s = red.weights(x)
        f = -fneg
        gnorm = float(np.max(np.abs(gx))) if gx.size else 0.0
        mu, g, tol = _kkt(obj, s, free, opts)
        tiny = s < _DROP_WEIGHT
        drop = tiny & (s > 0) & (g < mu - tol) & ~sticky
        drop[anchor] = False
        bump = tiny & (g > mu + tol)
        stationary = np.max(np.abs(SCALE * s[free] * (g[free] - mu))) <= max(opts.gtol, 1e-2 * tol)
        kkt_ok = bool(ok and stationary and not bump.any())
        if total_iters >= opts.max_iter or (not drop.any() and not bump.any()):
            break
        sticky |= bump
        s[bump] = _RELEASE_WEIGHT
        s[drop] = 0.0
        s /= s.sum()
        free = np.flatnonzero(s > 0)
    return s, f, gnorm, total_iters, ok, kkt_ok


def _starts(spec: PenalizedObjectiveSpec, init, opts: OptimizerOptions) -> list[np.ndarray]:
    rng = np.random.default_rng(opts.seed)
    candidates = []
    if init is not None:
        candidates.append(interior(init))
    target = getattr(spec.penalty, "target", None)
    if target is None:
        try:
            target = product_distribution(independence_mle(expand_counts(spec.counts)))
        except UnobservedDyadError:
            target = None
    if target is not None:
        candidates.append(interior(target))
    candidates.append(np.full(N_NETWORKS, 1.0 / N_NETWORKS))
    starts: list[np.ndarray] = []
    for c in candidates:
        if not any(np.allclose(c, s, rtol=0, atol=1e-12) for s in starts):
            starts.append(c)
    starts = starts[: opts.n_starts]
    while len(starts) < opts.n_starts:
        starts.append(interior(rng.dirichlet(np.ones(N_NETWORKS))))
    return starts


def maximize(spec: PenalizedObjectiveSpec, init=None, opts: OptimizerOptions | None = None) -> FitResult:
    """Penalized maximum likelihood estimate of the network distribution.

    Starts, in order: ``init`` (clipped into the interior), the independence
    target, the uniform vector, then random Dirichlet draws, up to
    ``opts.n_starts`` in total. The best objective is returned.
    """
    opts = opts or OptimizerOptions()
    obj = _Objective(spec)
    starts = _starts(spec, init, opts)
    if init is not None and not np.isfinite(obj.value(starts[0])):
        raise OptimizationError("objective is not finite at the initial point")
    best = None
    used = 0
    for p0 in starts:
        used += 1
        s, f, gnorm, iters, ok, kkt_ok = _active_set_bfgs(obj, _weights(p0), opts)
        if not np.isfinite(f):
            continue
        if best is None or f > best[1]:
            best = (s, f, gnorm, iters, ok, kkt_ok)
        if opts.early_stop and kkt_ok:
            break
    if best is None:
        raise OptimizationError("all starts diverged")
    s, f, gnorm, iters, ok, kkt_ok = best
    ls = np.log(np.where(s > 0, s, 1.0))
    ls[s <= 0] = _LOG_TINY
    return FitResult(
        p_hat=EPS + SCALE * s,
        objective_value=float(f),
        converged=bool(ok),
        iterations=int(iters),
        gradient_norm=gnorm,
        lam=float(spec.lam),
        penalty=spec.penalty,
        theta=ls[1:] - ls[0],
        at_floor=s <= 0,
        kkt_satisfied=kkt_ok,
        n_starts=used,
    )


def _theta_grad(obj: _Objective, theta) -> np.ndarray:
    s = _softmax(np.concatenate(([0.0], theta)))
    g = obj.grad(EPS + SCALE * s)
    return (SCALE * s * (g - s @ g))[1:]


def observed_information(theta, spec: PenalizedObjectiveSpec, step: float = 1e-5) -> np.ndarray:
    """Negative Hessian of the penalized objective in theta, by central differences of the gradient."""
    obj = _Objective(spec)
    theta = np.asarray(theta, dtype=float)
    info = np.empty((N_FREE, N_FREE))
    for m in range(N_FREE):
        e = np.zeros(N_FREE)
        e[m] = step
        info[:, m] = -(_theta_grad(obj, theta + e) - _theta_grad(obj, theta - e)) / (2 * step)
    return 0.5 * (info + info.T)


def _require_converged(fit: FitResult):
    if not fit.converged:
        raise NotConvergedError("diagnostic requires a converged fit")


def _jacobian(theta) -> np.ndarray:
    """d p / d theta, shape 64 x 63."""
    s = _softmax(np.concatenate(([0.0], theta)))
    jac = -np.outer(s, s[1:])
    jac[1:, :] += np.diag(s[1:])
    return SCALE * jac


def fisher_standard_errors(fit: FitResult, spec: PenalizedObjectiveSpec, step: float = 1e-5) -> UncertaintyResult:
    """Standard errors of each ``p_k`` from the inverted observed information.

    The information matrix is only inverted when it is positive definite
    (smallest eigenvalue above ``1e-8`` times the largest); otherwise the
    standard errors are ``None``.
    """
    _require_converged(fit)
    info = observed_information(fit.theta, spec, step)
    eig = np.linalg.eigvalsh(info)
    top = np.max(np.abs(eig))
    rank = int(np.sum(np.abs(eig) > 1e-8 * top)) if top > 0 else 0
    invertible = bool(top > 0 and eig.min() > 1e-8 * top)
    se = None
    if invertible:
        cov = np.linalg.inv(info)
        jac = _jacobian(fit.theta)
        var = np.einsum("km,mn,kn->k", jac, cov, jac)
        se = np.sqrt(np.clip(var, 0, None))
    return UncertaintyResult(se, rank, invertible, info)


def hessian_rank(fit: FitResult, spec: PenalizedObjectiveSpec, tol: float = 1e-6) -> int:
    """Number of singular values of the observed information above ``tol`` times the largest."""
    _require_converged(fit)
    sv = np.linalg.svd(observed_information(fit.theta, spec), compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > tol * sv[0]))
