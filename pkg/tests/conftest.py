"""Shared fixtures and independent oracles used across the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from valvefit import Dataset, TrajectoryConfig, ValveParams, generate

# Canonical worked example: alpha=1, beta=-0.1, five samples, last two
# up-stroke.  Flows frozen from q = alpha*d + beta*m evaluated by hand:
#   [0.2, 0.4, 0.6, 0.5-0.1, 0.3-0.1] = [0.2, 0.4, 0.6, 0.4, 0.2]
FIVE_D = np.array([0.2, 0.4, 0.6, 0.5, 0.3])
FIVE_M = np.array([0, 0, 0, 1, 1])
FIVE_Q = np.array([0.2, 0.4, 0.6, 0.4, 0.2])
FIVE_PARAMS = ValveParams(1.0, -0.1)


@pytest.fixture
def five_sample_ds() -> Dataset:
    return Dataset(FIVE_D, FIVE_Q, time_ordered=True, true_modes=FIVE_M)


def make_ds(n=200, alpha=2.0, beta=-0.1, profile="triangular", reversals=3,
            noise_std=0.0, shuffle=False, seed=0, opening_range=(0.0, 1.0),
            reversal_probability=0.05) -> Dataset:
    cfg = TrajectoryConfig(n_samples=n, params=ValveParams(alpha, beta),
                           profile=profile, opening_range=opening_range,
                           n_reversals=reversals,
                           reversal_probability=reversal_probability,
                           noise_std=noise_std, shuffle=shuffle, seed=seed)
    return generate(cfg)


def gram_projector(openings: np.ndarray, modes: np.ndarray) -> np.ndarray:
    """Independent row-space projector built straight from the generating
    factors: D^T (D D^T)^{-1} D with D = [openings; modes] and the true
    second-moment Gram.  Used as the oracle against the SVD route."""
    d = np.vstack((openings, modes)).astype(float)
    gram = d @ d.T
    return d.T @ np.linalg.solve(gram, d)


def random_valve_instance(rng: np.random.Generator, min_beta=0.05):
    """A random noiseless two-mode instance for property sweeps."""
    alpha = rng.uniform(0.5, 5.0)
    beta = rng.uniform(min_beta, 1.0) * (1 if rng.random() < 0.5 else -1)
    n = int(rng.integers(50, 400))
    if rng.random() < 0.5:
        profile, kw = "triangular", {"reversals": int(rng.integers(1, 6))}
    else:
        profile, kw = "random_walk_strokes", \
            {"reversal_probability": rng.uniform(0.02, 0.15)}
    return make_ds(n=n, alpha=alpha, beta=beta, profile=profile,
                   seed=int(rng.integers(0, 2**63 - 1)), **kw), \
        ValveParams(alpha, beta)
