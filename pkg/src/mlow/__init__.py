"""Interpretable low-rank decomposition of time-series magnitude spectra.

The package splits a window into additive pieces through three stages:
amplitude/phase extraction (:mod:`mlow.spectral`), low-rank factorization of
pooled amplitudes (:mod:`mlow.factorization`), and the end-to-end
fit/transform pipeline (:mod:`mlow.pipeline`).  A ridge-regression harness
(:mod:`mlow.forecaster`) measures the decomposition's downstream value, and
``mlow.cli`` exposes everything on the command line.
"""

__version__ = "0.1.0"

from .errors import (
    CsvParseError,
    InsufficientDataError,
    InvalidInputError,
    InvalidMethodError,
    InvalidRankError,
    MlowError,
    NumericalError,
)
from .spectral import (
    BasisMatrix,
    SpectrumSample,
    compute_spectrum,
    compute_spectra,
    mean_intercept,
    reconstruct_bases,
    reconstruct_window,
)
from .factorization import (
    ComponentMatrix,
    SpectraMatrix,
    cosine_penalty_and_gradient,
    fit_components,
    fit_hyperplane_nmf,
    fit_nmf,
    fit_pca,
    fit_semi_nmf,
    infer_coefficients,
    infer_nmf_coefficients,
    least_squares_coefficients,
    project_coefficients,
)
from .pipeline import (
    Decomposition,
    MlowConfig,
    MlowModel,
    collect_training_spectra,
    decompose_batch,
    export_component_report,
    fit,
    load_model,
    moving_average_decompose,
    save_model,
    transform,
)
from .dataio import SeriesTable, SplitDataset, load_csv, save_csv, sliding_windows, split
from .forecaster import EvalReport, RidgeModel, build_features, featurize, fit_ridge, predict, run_eval
from .synth import generate_series

__all__ = [
    "__version__",
    # errors
    "MlowError", "InvalidInputError", "InvalidRankError", "InvalidMethodError",
    "InsufficientDataError", "NumericalError", "CsvParseError",
    # spectral
    "SpectrumSample", "BasisMatrix", "compute_spectrum", "compute_spectra",
    "reconstruct_bases", "mean_intercept", "reconstruct_window",
    # factorization
    "SpectraMatrix", "ComponentMatrix", "fit_pca", "fit_nmf", "fit_semi_nmf",
    "fit_hyperplane_nmf", "fit_components", "cosine_penalty_and_gradient",
    "project_coefficients", "least_squares_coefficients", "infer_coefficients",
    "infer_nmf_coefficients",
    # pipeline
    "MlowConfig", "MlowModel", "Decomposition", "collect_training_spectra",
    "fit", "transform", "decompose_batch", "moving_average_decompose",
    "export_component_report", "save_model", "load_model",
    # dataio
    "SeriesTable", "SplitDataset", "load_csv", "save_csv", "split", "sliding_windows",
    # forecaster
    "RidgeModel", "EvalReport", "featurize", "build_features", "fit_ridge",
    "predict", "run_eval",
    # synth
    "generate_series",
]
