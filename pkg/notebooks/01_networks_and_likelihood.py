# A household of four (two children, two adults) has six dyads, so 64
# possible contact networks. Each survey respondent only sees the three
# dyads they are part of.
import numpy as np

from hhnet.network import (
    DYAD_LABELS,
    PartialObservation,
    Role,
    consistency_matrix,
    exchangeability_orbits,
    index_to_vector,
)
from hhnet.likelihood import hellinger_penalty, log_likelihood

# Network k is a 6-bit number; bit j is dyad j.
for k in (0, 5, 38, 63):
    print(k, dict(zip(DYAD_LABELS, index_to_vector(k))))

# A respondent's report is consistent with exactly 8 networks: the three
# dyads they do not see are free.
obs = PartialObservation(Role.C1, {0: 1, 1: 1, 2: 1})
A = consistency_matrix()
print("consistent with", np.flatnonzero(A[obs.config]))
print(A.shape, "every row sums to", set(A.sum(axis=1)))

# Children are exchangeable and adults are exchangeable, which groups the
# 64 networks into 28 orbits.
orbits = exchangeability_orbits()
sizes = np.bincount([len(o) for o in orbits])
print(len(orbits), "orbits; sizes:", {s: int(c) for s, c in enumerate(sizes) if c})

# The likelihood of a report is the total mass on its consistent set.
uniform = np.full(64, 1 / 64)
print(log_likelihood(uniform, [obs]), np.log(8 / 64))

point = np.zeros(64)
point[63] = 1
print(log_likelihood(point, [obs]))  # 0: the complete network explains it fully

# The independence penalty measures Hellinger distance to a product
# distribution.
print(hellinger_penalty(uniform, point))
