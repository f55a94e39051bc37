"""Synthetic valve trajectories with hysteresis, noise and optional shuffling.

Random numbers come from numpy's PCG64 generator.  The configured seed is
fed to a ``SeedSequence`` which is split into three independent,
platform-stable substreams, consumed in this fixed order:

    0. stroke profile (random-walk directions and step sizes),
    1. additive flow noise,
    2. the shuffle permutation.

Two configurations with the same seed therefore produce bitwise-identical
datasets, and changing e.g. the noise level does not perturb the stroke
profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import ConstantSignalError
from .model import Dataset, ValveParams, forward_flow

__all__ = ["TrajectoryConfig", "generate", "measure_snr", "PROFILES"]

PROFILES = ("triangular", "random_walk_strokes")

# Fraction of the opening range covered by one nominal random-walk step.
_WALK_BASE_STEP = 1.0 / 16.0


@dataclass(frozen=True)
class TrajectoryConfig:
    """Configuration of one synthetic trajectory.

    ``n_reversals`` applies to the triangular profile (number of stroke
    direction changes, >= 1); ``reversal_probability`` applies to the
    random-walk profile (chance per step of flipping direction, on top of
    forced reflection at the range boundaries).
    """

    n_samples: int
    params: ValveParams
    profile: str = "triangular"
    opening_range: Tuple[float, float] = (0.0, 1.0)
    n_reversals: int = 1
    reversal_probability: float = 0.05
    noise_std: float = 0.0
    shuffle: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        lo, hi = self.opening_range
        if not (0.0 <= lo < hi <= 1.0):
            raise ValueError(
                f"opening_range must satisfy 0 <= lo < hi <= 1, got {self.opening_range!r}"
            )
        if self.n_samples < 4:
            raise ValueError(f"n_samples must be >= 4, got {self.n_samples}")
        if self.profile not in PROFILES:
            raise ValueError(f"profile must be one of {PROFILES}, got {self.profile!r}")
        if self.profile == "triangular":
            if self.n_reversals < 1:
                raise ValueError("triangular profile needs n_reversals >= 1")
            if self.n_samples < self.n_reversals + 1:
                raise ValueError("need at least one sample per stroke leg")
        else:
            if not (0.0 <= self.reversal_probability <= 1.0):
                raise ValueError("reversal_probability must be in [0, 1]")
        if not (np.isfinite(self.noise_std) and self.noise_std >= 0.0):
            raise ValueError(f"noise_std must be >= 0, got {self.noise_std}")


def _triangular_profile(n: int, lo: float, hi: float,
                        n_reversals: int) -> Tuple[np.ndarray, np.ndarray]:
    # Alternating full-range legs starting upward from lo.  Within a leg of
    # length L the opening moves in L equal steps and lands exactly on the
    # target bound; step size is always > 0, so no sample repeats its
    # predecessor and every sample has a well-defined stroke direction.
    legs = n_reversals + 1
    base, extra = divmod(n, legs)
    openings = np.empty(n)
    modes = np.empty(n, dtype=np.int64)
    pos = 0
    start = lo
    for leg in range(legs):
        length = base + (1 if leg < extra else 0)
        target = hi if leg % 2 == 0 else lo
        k = np.arange(1, length + 1)
        openings[pos:pos + length] = start + (target - start) * (k / length)
        modes[pos:pos + length] = 1 if target > start else 0
        pos += length
        start = target
    return openings, modes


def _random_walk_profile(n: int, lo: float, hi: float, p_flip: float,
                         rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    # Starts at lo moving upward, like the triangular profile.  Each step
    # moves by base * U(0.5, 1.5); the direction flips with probability
    # p_flip and is reflected whenever a step would leave [lo, hi].
    base = (hi - lo) * _WALK_BASE_STEP
    openings = np.empty(n)
    modes = np.empty(n, dtype=np.int64)
    x = lo
    direction = 1
    for i in range(n):
        if rng.random() < p_flip:
            direction = -direction
        step = base * rng.uniform(0.5, 1.5)
        nxt = x + direction * step
        if nxt > hi or nxt < lo:
            direction = -direction
            nxt = x + direction * step
        openings[i] = nxt
        modes[i] = 1 if direction > 0 else 0
        x = nxt
    return openings, modes


def generate(cfg: TrajectoryConfig) -> Dataset:
    """Generate a synthetic dataset with ground-truth modes.

    Openings follow the configured stroke profile; flows are the model
    flow plus Gaussian noise of standard deviation ``noise_std`` (flow
    channel only; openings are treated as exactly known).  With
    ``shuffle`` the samples are permuted by a seeded permutation, the
    dataset is marked as not time-ordered, and the permutation itself is
    discarded: only the per-sample ground-truth modes travel along.
    """
    traj_ss, noise_ss, shuffle_ss = np.random.SeedSequence(cfg.seed).spawn(3)
    lo, hi = cfg.opening_range
    if cfg.profile == "triangular":
        openings, modes = _triangular_profile(cfg.n_samples, lo, hi, cfg.n_reversals)
    else:
        rng = np.random.Generator(np.random.PCG64(traj_ss))
        openings, modes = _random_walk_profile(
            cfg.n_samples, lo, hi, cfg.reversal_probability, rng)

    flows = forward_flow(cfg.params, openings, modes)
    if cfg.noise_std > 0.0:
        rng = np.random.Generator(np.random.PCG64(noise_ss))
        flows = flows + rng.normal(0.0, cfg.noise_std, cfg.n_samples)

    if cfg.shuffle:
        rng = np.random.Generator(np.random.PCG64(shuffle_ss))
        perm = rng.permutation(cfg.n_samples)
        return Dataset(openings[perm], flows[perm],
                       time_ordered=False, true_modes=modes[perm])
    return Dataset(openings, flows, time_ordered=True, true_modes=modes)


def measure_snr(clean_flows, noise_std: float) -> float:
    """Signal-to-noise ratio in dB of a flow signal under additive noise.

    Defined as ``10 * log10(var(clean_flows) / noise_std**2)`` with the
    population variance.  ``noise_std == 0`` is not an error: it returns
    ``math.inf`` as the distinct "noiseless" value.
    """
    flows = np.asarray(clean_flows, dtype=np.float64)
    if flows.size < 2:
        raise ValueError("need at least 2 samples to measure SNR")
    if noise_std < 0.0:
        raise ValueError("noise_std must be >= 0")
    if noise_std == 0.0:
        return math.inf
    var = float(flows.var())
    if var == 0.0:
        raise ConstantSignalError("clean flow signal is constant; SNR undefined")
    return 10.0 * math.log10(var / noise_std**2)
