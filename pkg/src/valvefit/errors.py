"""Exception hierarchy shared by all valvefit modules."""

from __future__ import annotations


class ValveFitError(Exception):
    """Base class for all valvefit errors."""


class NotTimeOrderedError(ValveFitError):
    """Switching epochs were requested for a dataset whose sample order
    does not reflect acquisition time."""


class DegenerateSpreadError(ValveFitError):
    """All samples lie on a single line, so the orthogonal residuals have
    no spread to cluster on (single-mode signal, or zero hysteresis)."""


class SingleModeError(ValveFitError):
    """Only one stroke mode is present in the labels; the hysteresis
    offset is unidentifiable."""


class IllConditionedError(ValveFitError):
    """The normal-equations Gram matrix is too ill-conditioned to solve
    reliably (condition number above the configured limit)."""


class ConstantSignalError(ValveFitError):
    """The clean flow signal is constant; a signal-to-noise ratio is
    undefined."""


class EstimationError(ValveFitError):
    """A fit could not be completed.

    Carries whatever partial diagnostics were available when the failure
    occurred (singular values, warnings collected so far) in
    ``diagnostics``.
    """

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
