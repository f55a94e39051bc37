"""Domain types and the forward measurement model of a hysteretic linear valve.

The valve switches between two straight flow-vs-opening lines: the
down-stroke line passes through the origin, ``q = alpha * mu``, and the
up-stroke line is shifted by a constant flow offset, ``q = alpha * mu +
beta``.  Which line a sample belongs to is its *mode* (0 = down-stroke,
1 = up-stroke).  Everything downstream (synthetic generation, subspace
classification, least squares) is phrased in terms of these types.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import NotTimeOrderedError

__all__ = [
    "Measurement",
    "ValveParams",
    "Dataset",
    "forward_flow",
    "build_data_matrix",
    "switching_epochs",
    "as_mode_labels",
]


@dataclass(frozen=True)
class Measurement:
    """A single (opening, flow) sample; ``index`` is the 1-based ordinal."""

    opening: float
    flow: float
    index: int


@dataclass(frozen=True)
class ValveParams:
    """Flow gain and hysteresis offset of the two-line valve model.

    ``alpha`` is the flow gained per unit opening (must be positive);
    ``beta`` is the signed flow offset of the up-stroke line.  The flow
    coefficient of the valve is proportional to ``alpha`` under constant
    operating pressure; the proportionality constant depends on the
    installation and is deliberately not modelled here.
    """

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.alpha) or self.alpha <= 0.0:
            raise ValueError(f"alpha must be finite and > 0, got {self.alpha!r}")
        if not np.isfinite(self.beta):
            raise ValueError(f"beta must be finite, got {self.beta!r}")

    @property
    def hysteresis_width(self) -> float:
        """Hysteresis width in opening units, ``abs(beta) / alpha``.

        Always recomputed from alpha and beta, never stored.
        """
        return abs(self.beta) / self.alpha


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ordered collection of (opening, flow) samples.

    ``time_ordered`` states whether the sample order reflects acquisition
    time; when False the samples are an unknown permutation of the
    acquired sequence and switching epochs are undefined.  ``true_modes``
    carries per-sample ground-truth stroke labels and is only populated on
    the synthetic path.

    Openings and flows must be finite.  Openings outside [0, 1] are
    accepted here (real data may be miscalibrated); the fitting pipeline
    flags them in its report.
    """

    openings: np.ndarray
    flows: np.ndarray
    time_ordered: bool = True
    true_modes: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        openings = np.atleast_1d(np.asarray(self.openings, dtype=np.float64)).copy()
        flows = np.atleast_1d(np.asarray(self.flows, dtype=np.float64)).copy()
        if openings.ndim != 1 or flows.ndim != 1:
            raise ValueError("openings and flows must be 1-D sequences")
        if openings.size != flows.size:
            raise ValueError(
                f"length mismatch: {openings.size} openings vs {flows.size} flows"
            )
        if openings.size == 0:
            raise ValueError("dataset must contain at least one sample")
        if not np.isfinite(openings).all():
            raise ValueError("openings contain non-finite values")
        if not np.isfinite(flows).all():
            raise ValueError("flows contain non-finite values")
        object.__setattr__(self, "openings", _readonly(openings))
        object.__setattr__(self, "flows", _readonly(flows))
        if self.true_modes is not None:
            modes = as_mode_labels(self.true_modes, openings.size)
            object.__setattr__(self, "true_modes", _readonly(modes))

    def __len__(self) -> int:
        return self.openings.size

    @property
    def n(self) -> int:
        return self.openings.size

    def measurements(self) -> Iterator[Measurement]:
        """Iterate samples as Measurement records with 1-based indices."""
        for i in range(self.n):
            yield Measurement(float(self.openings[i]), float(self.flows[i]), i + 1)

    def permuted(self, perm: Sequence[int]) -> "Dataset":
        """Return a column-permuted copy (sample order no longer temporal)."""
        perm = np.asarray(perm)
        modes = None if self.true_modes is None else self.true_modes[perm]
        return Dataset(self.openings[perm], self.flows[perm],
                       time_ordered=False, true_modes=modes)


def as_mode_labels(labels, n: Optional[int] = None) -> np.ndarray:
    """Validate and coerce per-sample stroke labels to an int64 {0,1} array."""
    arr = np.atleast_1d(np.asarray(labels))
    if arr.ndim != 1:
        raise ValueError("mode labels must be a 1-D sequence")
    values = np.unique(arr)
    if not np.isin(values, (0, 1)).all():
        raise ValueError(f"mode labels must be 0 or 1, found {values!r}")
    if n is not None and arr.size != n:
        raise ValueError(f"expected {n} labels, got {arr.size}")
    return arr.astype(np.int64)


def forward_flow(params: ValveParams, opening, mode):
    """Model flow for an opening in a given stroke mode.

    ``q = alpha * opening + beta * mode``; the down-stroke line passes
    through the origin and the up-stroke line is offset by beta.  Accepts
    scalars or arrays.  No clipping is applied: openings near zero in
    mode 1 may legitimately produce negative model flow.
    """
    opening = np.asarray(opening, dtype=np.float64)
    mode = np.asarray(mode)
    if not np.isin(np.unique(mode), (0, 1)).all():
        raise ValueError("mode must be 0 (down-stroke) or 1 (up-stroke)")
    out = params.alpha * opening + params.beta * mode
    return float(out) if out.ndim == 0 else out


def build_data_matrix(ds: Dataset) -> np.ndarray:
    """Stack the dataset into the 2 x N matrix with openings in row 1 and
    flows in row 2, columns in sample order."""
    if len(ds) == 0:
        raise ValueError("empty dataset")
    return np.vstack((ds.openings, ds.flows))


def switching_epochs(labels, ds: Dataset) -> np.ndarray:
    """Return the 1-based indices where the stroke mode changes.

    An epoch is any n >= 2 with ``labels[n] != labels[n-1]`` (1-based).
    Only meaningful for time-ordered data; raises NotTimeOrderedError
    otherwise, since under an unknown permutation there is no "previous"
    sample.
    """
    if not ds.time_ordered:
        raise NotTimeOrderedError(
            "switching epochs are undefined: dataset is not time-ordered"
        )
    arr = as_mode_labels(labels, len(ds))
    return (np.flatnonzero(arr[1:] != arr[:-1]) + 2).astype(np.int64)
