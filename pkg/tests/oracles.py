"""Reference computations written without the package's numerical code.

Used to check the library against independent derivations of the same
quantities.
"""

from __future__ import annotations

from math import comb

import numpy as np
from scipy.optimize import brentq

PAIRS = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]  # people: C1, C2, A1, A2


def bits(k):
    return [(k >> j) & 1 for j in range(6)]


def incident(person):
    return [j for j, pair in enumerate(PAIRS) if person in pair]


def consistent_set(person, values):
    """Networks whose dyads incident to ``person`` equal ``values`` (in dyad order)."""
    dyads = incident(person)
    return [k for k in range(64) if [bits(k)[j] for j in dyads] == list(values)]


def relabel(k, perm):
    z = bits(k)
    w = [0] * 6
    for j, (a, b) in enumerate(PAIRS):
        w[PAIRS.index(tuple(sorted((perm[a], perm[b]))))] = z[j]
    return sum(v << j for j, v in enumerate(w))


SWAPS = [(0, 1, 2, 3), (1, 0, 2, 3), (0, 1, 3, 2), (1, 0, 3, 2)]


def orbits():
    return {frozenset(relabel(k, g) for g in SWAPS) for k in range(64)}


def _upper_tail(s, t, p):
    return sum(comb(t, j) * p**j * (1 - p) ** (t - j) for j in range(s, t + 1))


def _lower_tail(s, t, p):
    return sum(comb(t, j) * p**j * (1 - p) ** (t - j) for j in range(0, s + 1))


def clopper_pearson(s, t, level=0.95):
    """Exact interval by root-finding on binomial tail sums."""
    a = (1 - level) / 2
    lo = 0.0 if s == 0 else brentq(lambda p: _upper_tail(s, t, p) - a, 1e-15, 1 - 1e-15, xtol=1e-15, rtol=1e-15)
    hi = 1.0 if s == t else brentq(lambda p: _lower_tail(s, t, p) - a, 1e-15, 1 - 1e-15, xtol=1e-15, rtol=1e-15)
    return lo, hi


def observation_sets(data):
    """Consistency sets of each observation, rebuilt from scratch."""
    out = []
    for obs in data:
        person = int(obs.respondent)
        values = [v for _, v in sorted(obs.reports)]
        out.append(consistent_set(person, values))
    return out


def em_mle(data, iters=200_000, tol=1e-15):
    """Unpenalized maximum likelihood by EM over the 64 networks.

    Each observation is a mixture over its consistency set; the E-step
    splits it in proportion to current mass, the M-step averages.
    Returns ``(p, loglik)``.
    """
    sets = observation_sets(data)
    n = len(sets)
    p = np.full(64, 1 / 64)
    prev = -np.inf
    for _ in range(iters):
        new = np.zeros(64)
        for s in sets:
            new[s] += p[s] / p[s].sum()
        p = new / n
        ll = sum(np.log(p[s].sum()) for s in sets)
        if ll - prev < tol:
            break
        prev = ll
    return p, float(ll)


def fd_gradient(f, p, h=1e-6):
    g = np.empty_like(p)
    for k in range(p.size):
        e = np.zeros_like(p)
        e[k] = h
        g[k] = (f(p + e) - f(p - e)) / (2 * h)
    return g
