import numpy as np

from hhnet.simulation import PAPER_FREQUENCY, RespondentFrequency, dependent_scenario, simulate_sample


def sample(seed, n=30, p=None, freq=PAPER_FREQUENCY):
    """Synthetic survey drawn from ``p`` (default: the dependent scenario)."""
    p = dependent_scenario() if p is None else p
    return simulate_sample(p, n, RespondentFrequency(freq), np.random.default_rng(seed))
