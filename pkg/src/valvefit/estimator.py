"""Mode-conditioned least squares, the fitting pipeline and the baselines.

Given stroke labels m, the parameters solve the normal equations of

    min over (alpha, beta) of  sum_n (q_n - alpha*mu_n - beta*m_n)^2

with the 2 x 2 Gram matrix [[sum mu^2, sum_up mu], [sum_up mu, N_up]].
The full pipeline obtains the labels from the row-space projector
machinery in :mod:`valvefit.subspace`; two baselines (a plain
through-origin line and residual 2-means without subspace refinement)
provide the comparison points for the evaluation harness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import (DegenerateSpreadError, EstimationError,
                     IllConditionedError, SingleModeError)
from .model import Dataset, ValveParams, as_mode_labels, build_data_matrix, \
    switching_epochs
from .subspace import (RANK_REL_TOL, effective_rank, extract_indicator,
                       init_labels, lloyd_two_means, normalize_rows, thin_svd2)

__all__ = [
    "WARN_OUT_OF_RANGE_OPENINGS",
    "WARN_NO_HYSTERESIS",
    "WARN_SINGLE_MODE",
    "WARN_AMBIGUOUS_IDENTITY",
    "PipelineConfig",
    "FitResult",
    "FitMetrics",
    "ls_fit_labeled",
    "assign_mode_identity",
    "fit_pipeline",
    "baseline_naive",
    "baseline_residual_kmeans",
    "metrics",
]

WARN_OUT_OF_RANGE_OPENINGS = "OutOfRangeOpenings"
WARN_NO_HYSTERESIS = "NoHysteresisDetected"
WARN_SINGLE_MODE = "SingleModeDetected"
WARN_AMBIGUOUS_IDENTITY = "AmbiguousModeIdentity"


@dataclass(frozen=True)
class PipelineConfig:
    """Numerical knobs of the fitting pipeline.

    ``rank_rel_tol`` is the relative singular-value threshold below which
    the data matrix counts as a single line; ``cond_limit`` bounds the
    Gram condition number accepted by the least-squares solve.  Both are
    tuned for double precision.
    """

    tol: float = 1e-10
    max_iter: int = 100
    rank_rel_tol: float = RANK_REL_TOL
    cond_limit: float = 1e12


@dataclass(frozen=True)
class FitResult:
    """Outcome of a fit.

    ``labels``/``epochs``/``sigma`` are None where a method does not
    produce them (the naive baseline has no mode labels; epochs exist only
    for time-ordered data; only the pipeline computes singular values,
    which refer to the row-normalized data matrix).  ``warnings`` uses the
    string constants ``WARN_*`` from this module.
    """

    params: ValveParams
    labels: Optional[np.ndarray]
    epochs: Optional[np.ndarray]
    residual_rms: float
    sigma: Optional[np.ndarray]
    iterations: int
    converged: bool
    warnings: Tuple[str, ...] = ()

    def ssr(self, ds: Dataset) -> float:
        """Sum of squared residuals implied by residual_rms on ds."""
        return self.residual_rms**2 * len(ds)


@dataclass(frozen=True)
class FitMetrics:
    """Fit quality against ground truth."""

    misclassification_ratio: float
    alpha_rel_err: float
    beta_abs_err: float
    epoch_set_distance: Optional[int] = None


def _gram(mu: np.ndarray, m: np.ndarray) -> np.ndarray:
    return np.array([[mu @ mu, mu @ m],
                     [mu @ m, float(m.sum())]])


def _solve_labeled(mu: np.ndarray, q: np.ndarray, m: np.ndarray,
                   cond_limit: float) -> Tuple[float, float, float]:
    """Solve the mode-conditioned normal equations.

    Returns (alpha, beta, ssr); raises IllConditionedError when the Gram
    matrix condition number exceeds ``cond_limit``.
    """
    g = _gram(mu, m)
    cond = np.linalg.cond(g)
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditionedError(
            f"Gram matrix condition number {cond:.3e} exceeds {cond_limit:.1e}")
    alpha, beta = np.linalg.solve(g, np.array([mu @ q, m @ q]))
    r = q - alpha * mu - beta * m
    return float(alpha), float(beta), float(r @ r)


def ls_fit_labeled(ds: Dataset, labels) -> Tuple[ValveParams, float]:
    """Least-squares parameters for a given mode assignment.

    Requires both modes to be present (the offset is unidentifiable
    otherwise).  Returns the fitted parameters and the residual RMS
    ``sqrt(SSR / N)``.
    """
    m = as_mode_labels(labels, len(ds))
    n_up = int(m.sum())
    if n_up == 0 or n_up == len(ds):
        raise SingleModeError(
            "both stroke modes must be present to identify the hysteresis offset")
    alpha, beta, ssr = _solve_labeled(ds.openings, ds.flows, m,
                                      PipelineConfig.cond_limit)
    try:
        params = ValveParams(alpha, beta)
    except ValueError as exc:
        raise EstimationError(f"least-squares fit is unphysical: {exc}") from exc
    return params, float(np.sqrt(ssr / len(ds)))


def _assign_identity(mu: np.ndarray, q: np.ndarray, partition: np.ndarray,
                     cond_limit: float) -> Tuple[np.ndarray, bool]:
    """Pick which cluster of a two-cluster partition is the up-stroke.

    Fits both candidate assignments and keeps the one with the smaller
    SSR; the down-stroke line is anchored at the origin, which is what
    makes the identity observable.  On an exact SSR tie the assignment
    with fewer up-stroke samples wins (reported as ambiguous); a candidate
    whose Gram matrix is ill-conditioned is skipped.
    """
    cand_a = as_mode_labels(partition, mu.size)
    cand_b = 1 - cand_a
    if cand_a.sum() == 0 or cand_b.sum() == 0:
        raise SingleModeError("both clusters must be nonempty")
    ssrs = []
    for cand in (cand_a, cand_b):
        try:
            ssrs.append(_solve_labeled(mu, q, cand, cond_limit)[2])
        except IllConditionedError:
            ssrs.append(np.inf)
    if not np.isfinite(ssrs).any():
        raise IllConditionedError(
            "both mode-identity assignments are ill-conditioned")
    if ssrs[0] < ssrs[1]:
        return cand_a, False
    if ssrs[1] < ssrs[0]:
        return cand_b, False
    # exact tie: prefer the sparser up-stroke; stable on a count tie
    return (cand_a if cand_a.sum() <= cand_b.sum() else cand_b), True


def assign_mode_identity(ds: Dataset, partition) -> np.ndarray:
    """Resolve a two-cluster partition into up/down stroke labels by SSR."""
    labels, _ = _assign_identity(ds.openings, ds.flows,
                                 as_mode_labels(partition, len(ds)),
                                 PipelineConfig.cond_limit)
    return labels


def _origin_line_fit(ds: Dataset) -> Tuple[float, float]:
    """One-parameter LS through the origin: alpha = sum(mu q)/sum(mu^2)."""
    mu, q = ds.openings, ds.flows
    smu2 = float(mu @ mu)
    if smu2 == 0.0:
        raise EstimationError("all openings are zero; the flow gain is unidentifiable")
    alpha = float(mu @ q) / smu2
    r = q - alpha * mu
    return alpha, float(r @ r)


def _epochs_or_none(labels: np.ndarray, ds: Dataset) -> Optional[np.ndarray]:
    return switching_epochs(labels, ds) if ds.time_ordered else None


def _single_line_result(ds: Dataset, sigma: np.ndarray,
                        warnings: list) -> FitResult:
    # rank-deficient data matrix: flows proportional to openings, the two
    # stroke lines coincide.  Fall back to the through-origin line.
    diagnostics = {"singular_values": sigma.tolist(), "warnings": warnings}
    try:
        alpha, ssr = _origin_line_fit(ds)
    except EstimationError as exc:
        raise EstimationError(str(exc), diagnostics=diagnostics) from exc
    if alpha <= 0.0:
        raise EstimationError(
            "single-line data with non-positive flow gain",
            diagnostics=diagnostics)
    labels = np.zeros(len(ds), dtype=np.int64)
    return FitResult(params=ValveParams(alpha, 0.0), labels=labels,
                     epochs=_epochs_or_none(labels, ds),
                     residual_rms=float(np.sqrt(ssr / len(ds))), sigma=sigma,
                     iterations=0, converged=True, warnings=tuple(warnings))


def _single_mode_result(ds: Dataset, sigma: np.ndarray,
                        warnings: list, cond_limit: float) -> FitResult:
    # all samples on one line that misses the origin: a single stroke was
    # recorded.  Decide which stroke by SSR: the down-stroke hypothesis is
    # the through-origin line, the up-stroke hypothesis an affine line.
    mu, q = ds.openings, ds.flows
    candidates = []
    try:
        alpha0, ssr0 = _origin_line_fit(ds)
        if alpha0 > 0.0:
            candidates.append((ssr0, alpha0, 0.0, 0))
    except EstimationError:
        pass
    try:
        ones = np.ones(len(ds), dtype=np.int64)
        alpha1, beta1, ssr1 = _solve_labeled(mu, q, ones, cond_limit)
        if alpha1 > 0.0:
            candidates.append((ssr1, alpha1, beta1, 1))
    except IllConditionedError:
        pass
    if not candidates:
        raise EstimationError(
            "single-mode data admits no physical fit",
            diagnostics={"singular_values": sigma.tolist(), "warnings": warnings})
    ssr, alpha, beta, mode = min(candidates, key=lambda c: (c[0], c[3]))
    labels = np.full(len(ds), mode, dtype=np.int64)
    return FitResult(params=ValveParams(alpha, beta), labels=labels,
                     epochs=_epochs_or_none(labels, ds),
                     residual_rms=float(np.sqrt(ssr / len(ds))), sigma=sigma,
                     iterations=0, converged=True, warnings=tuple(warnings))


def fit_pipeline(ds: Dataset, config: Optional[PipelineConfig] = None) -> FitResult:
    """End-to-end fit: subspace classification + mode-conditioned LS.

    Steps: build the 2 x N data matrix; normalize its rows; thin SVD;
    numerical rank check (a single effective line means no detectable
    hysteresis); TLS-residual clustering for initial labels; mode-identity
    assignment; alternating-projection refinement of the labels; identity
    re-check; final least squares on the original (unnormalized) data;
    switching epochs when the data is time-ordered.

    Degenerate inputs (no hysteresis, single stroke) return a result
    carrying a warning instead of raising; hard failures raise
    EstimationError with whatever diagnostics were available.
    """
    cfg = config or PipelineConfig()
    n = len(ds)
    warnings: list = []
    if n < 4:
        raise EstimationError(f"need at least 4 samples, got {n}",
                              diagnostics={"warnings": warnings})
    if ((ds.openings < 0.0) | (ds.openings > 1.0)).any():
        warnings.append(WARN_OUT_OF_RANGE_OPENINGS)

    z = build_data_matrix(ds)
    zn, _ = normalize_rows(z)
    basis = thin_svd2(zn)
    sigma = basis.sigma
    rank = effective_rank(sigma, cfg.rank_rel_tol)
    if rank == 0:
        raise EstimationError(
            "data matrix is identically zero",
            diagnostics={"singular_values": sigma.tolist(), "warnings": warnings})
    if rank == 1:
        return _single_line_result(ds, sigma, warnings + [WARN_NO_HYSTERESIS])

    try:
        partition = init_labels(zn)
    except DegenerateSpreadError:
        return _single_mode_result(ds, sigma, warnings + [WARN_SINGLE_MODE],
                                   cfg.cond_limit)

    mu, q = ds.openings, ds.flows
    labels0, tied0 = _assign_identity(mu, q, partition, cfg.cond_limit)
    est = extract_indicator(basis, labels0, tol=cfg.tol, max_iter=cfg.max_iter)
    refined = est.labels
    if refined.min() == refined.max():
        # refinement collapsed onto the trivial all-0/all-1 fixed point;
        # it carries no information, keep the clustering initialization
        refined = labels0
    labels, tied = _assign_identity(mu, q, refined, cfg.cond_limit)
    if tied0 or tied:
        warnings.append(WARN_AMBIGUOUS_IDENTITY)

    params, rms = ls_fit_labeled(ds, labels)

    # offset smaller than 3x its own standard error: report the fit but
    # flag that the hysteresis is not statistically detected
    g = _gram(mu, labels.astype(np.float64))
    ginv_22 = g[0, 0] / (g[0, 0] * g[1, 1] - g[0, 1] ** 2)
    if abs(params.beta) < 3.0 * rms * np.sqrt(ginv_22):
        warnings.append(WARN_NO_HYSTERESIS)

    return FitResult(params=params, labels=labels,
                     epochs=_epochs_or_none(labels, ds),
                     residual_rms=rms, sigma=sigma,
                     iterations=est.iterations, converged=est.converged,
                     warnings=tuple(warnings))


def baseline_naive(ds: Dataset) -> FitResult:
    """Hysteresis-blind comparison: one line through the origin.

    This is the classical flow-vs-opening window model; it produces no
    mode labels and no epochs.
    """
    if len(ds) < 2:
        raise EstimationError("need at least 2 samples")
    alpha, ssr = _origin_line_fit(ds)
    if alpha <= 0.0:
        raise EstimationError("through-origin fit has non-positive flow gain")
    return FitResult(params=ValveParams(alpha, 0.0), labels=None, epochs=None,
                     residual_rms=float(np.sqrt(ssr / len(ds))), sigma=None,
                     iterations=0, converged=True, warnings=())


def baseline_residual_kmeans(ds: Dataset) -> FitResult:
    """Clustering baseline: 2-means on the naive line's residuals.

    Identical to the pipeline's least-squares stage but with labels taken
    straight from residual clustering, without the subspace refinement.
    That missing step is exactly what the evaluation harness ablates.
    """
    if len(ds) < 4:
        raise EstimationError(f"need at least 4 samples, got {len(ds)}")
    naive = baseline_naive(ds)
    residuals = ds.flows - naive.params.alpha * ds.openings
    spread = residuals.max() - residuals.min()
    if spread <= 1e-8 * max(float(np.abs(ds.flows).max()), 1e-300):
        raise SingleModeError(
            "residuals from the through-origin line have no spread; "
            "single-mode signal")
    upper, _, iters, converged = lloyd_two_means(residuals)
    labels, tied = _assign_identity(ds.openings, ds.flows,
                                    upper.astype(np.int64),
                                    PipelineConfig.cond_limit)
    params, rms = ls_fit_labeled(ds, labels)
    warnings = (WARN_AMBIGUOUS_IDENTITY,) if tied else ()
    return FitResult(params=params, labels=labels,
                     epochs=_epochs_or_none(labels, ds),
                     residual_rms=rms, sigma=None,
                     iterations=iters, converged=converged, warnings=warnings)


def metrics(fit: FitResult, true_params: ValveParams, true_modes,
            true_epochs=None) -> FitMetrics:
    """Score a fit against ground truth.

    Misclassification counts label disagreements directly; no swap
    minimization is applied because the origin-anchored down-stroke pins
    the mode identity.  The epoch distance is the cardinality of the
    symmetric difference of the epoch sets, or None when either side has
    no epochs.
    """
    if fit.labels is None:
        raise ValueError("fit carries no labels; misclassification undefined")
    truth = as_mode_labels(true_modes, fit.labels.size)
    mis = float(np.mean(fit.labels != truth))
    alpha_rel = abs(fit.params.alpha - true_params.alpha) / abs(true_params.alpha)
    beta_abs = abs(fit.params.beta - true_params.beta)
    distance = None
    if fit.epochs is not None and true_epochs is not None:
        distance = len(set(np.asarray(fit.epochs).tolist())
                       ^ set(np.asarray(true_epochs).tolist()))
    return FitMetrics(misclassification_ratio=mis, alpha_rel_err=float(alpha_rel),
                      beta_abs_err=float(beta_abs), epoch_set_distance=distance)
