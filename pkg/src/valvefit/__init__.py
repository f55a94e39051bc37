"""valvefit: hysteresis-aware identification of linear control valves.

Estimates the flow gain, the hysteresis offset between up- and
down-stroke, and the stroke-switching epochs from noisy (opening, flow)
measurements, by classifying samples through the row-space projector of
the data matrix and then solving a mode-conditioned least-squares
problem.
"""

from .errors import (ConstantSignalError, DegenerateSpreadError,
                     EstimationError, IllConditionedError,
                     NotTimeOrderedError, SingleModeError, ValveFitError)
from .estimator import (WARN_AMBIGUOUS_IDENTITY, WARN_NO_HYSTERESIS,
                        WARN_OUT_OF_RANGE_OPENINGS, WARN_SINGLE_MODE,
                        FitMetrics, FitResult, PipelineConfig,
                        assign_mode_identity, baseline_naive,
                        baseline_residual_kmeans, fit_pipeline,
                        ls_fit_labeled, metrics)
from .evaluation import EvalConfig, EvalRow, run_eval
from .model import (Dataset, Measurement, ValveParams, as_mode_labels,
                    build_data_matrix, forward_flow, switching_epochs)
from .subspace import (IndicatorEstimate, SubspaceBasis, extract_indicator,
                       init_labels, normalize_rows, row_space_projector_apply,
                       thin_svd2)
from .synth import TrajectoryConfig, generate, measure_snr

__version__ = "0.1.0"

__all__ = [
    "ConstantSignalError", "DegenerateSpreadError", "EstimationError",
    "IllConditionedError", "NotTimeOrderedError", "SingleModeError",
    "ValveFitError",
    "WARN_AMBIGUOUS_IDENTITY", "WARN_NO_HYSTERESIS",
    "WARN_OUT_OF_RANGE_OPENINGS", "WARN_SINGLE_MODE",
    "FitMetrics", "FitResult", "PipelineConfig",
    "assign_mode_identity", "baseline_naive", "baseline_residual_kmeans",
    "fit_pipeline", "ls_fit_labeled", "metrics",
    "EvalConfig", "EvalRow", "run_eval",
    "Dataset", "Measurement", "ValveParams", "as_mode_labels",
    "build_data_matrix", "forward_flow", "switching_epochs",
    "IndicatorEstimate", "SubspaceBasis", "extract_indicator", "init_labels",
    "normalize_rows", "row_space_projector_apply", "thin_svd2",
    "TrajectoryConfig", "generate", "measure_snr",
    "__version__",
]
