"""Encoding of four-person household contact networks.

A network is a 6-vector of dyads in the fixed order

    0: C1-C2, 1: C1-A1, 2: C1-A2, 3: C2-A1, 4: C2-A2, 5: A1-A2

and is identified with the integer ``k = sum_j z_j 2**j`` (dyad 0 is the least
significant bit).
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

N_DYADS = 6
N_NETWORKS = 64
N_CONFIGS = 32


class Role(enum.IntEnum):
    """Household position of a respondent."""

    C1 = 0  # younger child
    C2 = 1  # older child
    A1 = 2  # female adult
    A2 = 3  # male adult


DYADS: tuple[tuple[Role, Role], ...] = (
    (Role.C1, Role.C2),
    (Role.C1, Role.A1),
    (Role.C1, Role.A2),
    (Role.C2, Role.A1),
    (Role.C2, Role.A2),
    (Role.A1, Role.A2),
)

DYAD_LABELS = ("c1-c2", "c1-m", "c1-d", "c2-m", "c2-d", "m-d")
DYAD_NAMES = tuple(a.name + b.name for a, b in DYADS)


def dyad_between(a: Role, b: Role) -> int:
    """Return the dyad id joining two distinct roles."""
    key = (min(a, b), max(a, b))
    for j, pair in enumerate(DYADS):
        if pair == key:
            return j
    raise ValueError(f"no dyad between {a!r} and {b!r}")


def index_to_vector(k: int) -> tuple[int, ...]:
    if isinstance(k, (bool, np.bool_)) or not isinstance(k, (int, np.integer)):
        raise TypeError(f"network index must be an integer, got {k!r}")
    if not 0 <= k < N_NETWORKS:
        raise ValueError(f"network index {k} outside 0..63")
    return tuple((int(k) >> j) & 1 for j in range(N_DYADS))


def vector_to_index(z: Sequence[int]) -> int:
    if len(z) != N_DYADS:
        raise ValueError(f"dyad vector must have length 6, got {len(z)}")
    k = 0
    for j, bit in enumerate(z):
        if bit not in (0, 1):
            raise ValueError(f"dyad value must be 0 or 1, got {bit!r}")
        k |= int(bit) << j
    return k


@lru_cache(maxsize=None)
def incident_dyads(role: Role) -> frozenset[int]:
    """The three dyads a respondent in ``role`` reports on."""
    role = Role(role)
    return frozenset(j for j, pair in enumerate(DYADS) if role in pair)


@dataclass(frozen=True)
class PartialObservation:
    """One respondent's report on the three dyads incident to them.

    ``reports`` maps dyad id to 0/1 and must cover exactly the respondent's
    incident dyads.
    """

    respondent: Role
    reports: Mapping[int, int]

    def __post_init__(self):
        role = Role(self.respondent)
        reports = {int(j): int(v) for j, v in dict(self.reports).items()}
        if set(reports) != incident_dyads(role):
            raise ValueError(
                f"{role.name} must report exactly dyads "
                f"{sorted(incident_dyads(role))}, got {sorted(reports)}"
            )
        if any(v not in (0, 1) for v in reports.values()):
            raise ValueError(f"report values must be 0 or 1: {reports}")
        object.__setattr__(self, "respondent", role)
        object.__setattr__(self, "reports", tuple(sorted(reports.items())))

    def report_dict(self) -> dict[int, int]:
        return dict(self.reports)

    @property
    def pattern(self) -> int:
        """3-bit report pattern, bits in increasing dyad order."""
        return sum(v << i for i, (_, v) in enumerate(self.reports))

    @property
    def config(self) -> int:
        """Configuration id in 0..31: ``8 * role + pattern``."""
        return 8 * int(self.respondent) + self.pattern

    @classmethod
    def from_config(cls, c: int) -> PartialObservation:
        if not 0 <= c < N_CONFIGS:
            raise ValueError(f"configuration id {c} outside 0..31")
        role = Role(c // 8)
        dyads = sorted(incident_dyads(role))
        return cls(role, {j: (c % 8 >> i) & 1 for i, j in enumerate(dyads)})

    @classmethod
    def from_network(cls, k: int, role: Role) -> PartialObservation:
        """Mask a complete network down to what ``role`` would report."""
        z = index_to_vector(k)
        return cls(role, {j: z[j] for j in incident_dyads(role)})


def is_consistent(k: int, obs: PartialObservation) -> bool:
    z = index_to_vector(k)
    return all(z[j] == v for j, v in obs.reports)


def all_configurations() -> list[PartialObservation]:
    return [PartialObservation.from_config(c) for c in range(N_CONFIGS)]


def distinct_configurations() -> int:
    return len(set(all_configurations()))


@lru_cache(maxsize=None)
def _consistency_matrix() -> np.ndarray:
    m = np.zeros((N_CONFIGS, N_NETWORKS))
    for obs in all_configurations():
        for k in range(N_NETWORKS):
            m[obs.config, k] = is_consistent(k, obs)
    m.setflags(write=False)
    return m


def consistency_matrix() -> np.ndarray:
    """32 x 64 indicator matrix; row ``c`` marks networks consistent with config ``c``."""
    return _consistency_matrix()


def config_counts(data: Iterable[PartialObservation]) -> np.ndarray:
    """Tally observations by configuration id (length-32 float array)."""
    ids = [obs.config for obs in data]
    return np.bincount(np.asarray(ids, dtype=int), minlength=N_CONFIGS).astype(float)


def expand_counts(counts) -> list[PartialObservation]:
    """Inverse of :func:`config_counts`, in configuration order."""
    return [PartialObservation.from_config(c) for c, m in enumerate(counts) for _ in range(int(m))]


def _swap_children(z):
    return (z[0], z[3], z[4], z[1], z[2], z[5])


def _swap_adults(z):
    return (z[0], z[2], z[1], z[4], z[3], z[5])


def relabelings() -> list:
    """The four relabelings {id, child swap, adult swap, both} acting on dyad vectors."""
    return [
        lambda z: tuple(z),
        _swap_children,
        _swap_adults,
        lambda z: _swap_adults(_swap_children(z)),
    ]


@lru_cache(maxsize=None)
def exchangeability_orbits() -> tuple[frozenset[int], ...]:
    """Partition of the 64 networks into orbits under child/adult swaps.

    Orbits are ordered by their smallest member.
    """
    seen: set[int] = set()
    orbits = []
    for k in range(N_NETWORKS):
        if k in seen:
            continue
        z = index_to_vector(k)
        orbit = frozenset(vector_to_index(g(z)) for g in relabelings())
        seen |= orbit
        orbits.append(orbit)
    return tuple(orbits)


@lru_cache(maxsize=None)
def adjacency_pairs() -> tuple[tuple[int, int], ...]:
    """Unordered pairs of networks that differ on exactly one dyad (192 pairs)."""
    return tuple(
        (i, i | (1 << j)) for i in range(N_NETWORKS) for j in range(N_DYADS) if not i >> j & 1
    )


@lru_cache(maxsize=None)
def exchangeability_pairs() -> tuple[tuple[int, int], ...]:
    """Unordered pairs of distinct networks sharing an exchangeability orbit."""
    pairs = []
    for orbit in exchangeability_orbits():
        pairs.extend(itertools.combinations(sorted(orbit), 2))
    return tuple(sorted(pairs))


def pair_laplacian(pairs: Iterable[tuple[int, int]]) -> np.ndarray:
    """Laplacian ``L`` with ``p @ L @ p == sum over pairs of (p_i - p_j)**2``."""
    lap = np.zeros((N_NETWORKS, N_NETWORKS))
    for i, j in pairs:
        lap[i, i] += 1
        lap[j, j] += 1
        lap[i, j] -= 1
        lap[j, i] -= 1
    return lap
