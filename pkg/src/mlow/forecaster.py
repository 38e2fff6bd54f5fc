"""Ridge-regression forecasting harness over raw, decomposed or MA features.

A deliberately small stand-in for a deep backbone: per-window features are
mapped to the full forecast horizon by a closed-form multi-output ridge.
Feature modes:

* ``raw``  -- the window's last ``T`` samples minus their own mean (the mean
  is added back to predictions), ``T`` features.
* ``mlow`` -- the ``rank`` decomposition pieces plus the residual, flattened
  to ``(rank+1)*T`` features; the mean intercept is excluded from features
  and added back to predictions.
* ``ma``   -- moving-average trend and seasonal stacked, ``2*T`` features.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import pipeline as pl
from .errors import InsufficientDataError, InvalidInputError

__all__ = [
    "FEATURE_MODES",
    "RidgeModel",
    "EvalReport",
    "featurize",
    "build_features",
    "fit_ridge",
    "predict",
    "evaluate_predictions",
    "run_eval",
]

logger = logging.getLogger(__name__)

FEATURE_MODES = ("raw", "mlow", "ma")

ALPHA_GRID = (1e-3, 1e-2, 1e-1, 1.0)


@dataclass(frozen=True)
class RidgeModel:
    weights: np.ndarray       # (horizon, n_features)
    bias: np.ndarray          # (horizon,)
    alpha: float
    feature_mode: str


@dataclass(frozen=True)
class EvalReport:
    mse: float
    mae: float
    n_windows: int
    horizon: int
    feature_mode: str
    alpha: float
    per_horizon_mse: tuple = ()
    per_horizon_mae: tuple = ()

    def to_dict(self) -> dict:
        return {
            "mse": self.mse,
            "mae": self.mae,
            "n_windows": self.n_windows,
            "horizon": self.horizon,
            "feature_mode": self.feature_mode,
            "alpha": self.alpha,
        }


def featurize(window_or_decomposition, mode: str, ma_kernel: int = 24) -> tuple[np.ndarray, float]:
    """Feature vector plus the constant level to re-add to predictions.

    ``raw``/``ma`` take the window tail (length T); ``mlow`` takes a
    :class:`~mlow.pipeline.Decomposition`.
    """
    if mode == "mlow":
        d = window_or_decomposition
        if not isinstance(d, pl.Decomposition):
            raise InvalidInputError("mlow mode expects a Decomposition")
        features = np.concatenate([d.pieces.ravel(), d.residual])
        return features, float(d.mean[0])
    w = np.asarray(window_or_decomposition, dtype=np.float64)
    if w.ndim != 1:
        raise InvalidInputError(f"expected a 1-D window, got shape {w.shape}")
    if mode == "raw":
        mean = float(w.mean())
        return w - mean, mean
    if mode == "ma":
        trend, seasonal = pl.moving_average_decompose(w, kernel=ma_kernel)
        return np.concatenate([trend, seasonal]), 0.0
    raise InvalidInputError(f"mode must be one of {FEATURE_MODES}, got {mode!r}")


def build_features(
    windows: np.ndarray,
    mode: str,
    model: pl.MlowModel | None = None,
    ma_kernel: int = 24,
) -> tuple[np.ndarray, np.ndarray]:
    """Batch features for (m, 2K) windows: returns (X, offsets).

    The window tail used by raw/ma is the last ``horizon`` samples as
    declared by ``model`` (required for mlow, optional otherwise: without a
    model the whole window is the tail).
    """
    W = np.asarray(windows, dtype=np.float64)
    if W.ndim != 2:
        raise InvalidInputError(f"windows must be 2-D, got shape {W.shape}")
    if mode == "mlow":
        if model is None:
            raise InvalidInputError("mlow features require a fitted pipeline model")
        pieces, residual, mean = pl.decompose_batch(model, W)
        X = np.concatenate([pieces.reshape(W.shape[0], -1), residual], axis=1)
        return X, mean
    tail = W[:, -model.config.horizon:] if model is not None else W
    if mode == "raw":
        offsets = tail.mean(axis=1)
        return tail - offsets[:, None], offsets
    if mode == "ma":
        feats = np.empty((tail.shape[0], 2 * tail.shape[1]))
        for i, row in enumerate(tail):
            trend, seasonal = pl.moving_average_decompose(row, kernel=ma_kernel)
            feats[i] = np.concatenate([trend, seasonal])
        return feats, np.zeros(tail.shape[0])
    raise InvalidInputError(f"mode must be one of {FEATURE_MODES}, got {mode!r}")


def _check_ridge_inputs(X: np.ndarray, Y: np.ndarray, alpha: float) -> None:
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise InvalidInputError(f"features {X.shape} and targets {Y.shape} do not align")
    if X.shape[0] < 1:
        raise InvalidInputError("need at least one sample")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise InvalidInputError("non-finite values in features or targets")
    if alpha < 0:
        raise InvalidInputError(f"alpha must be >= 0, got {alpha}")


def fit_ridge(features: np.ndarray, targets: np.ndarray, alpha: float, feature_mode: str = "raw") -> RidgeModel:
    """Closed-form multi-output ridge: solve (X^T X + alpha I) w = X^T Y.

    ``alpha = 0`` falls back to a least-squares solve (minimum-norm when
    singular).  The bias is the mean residual per output, so in the large-
    alpha limit predictions collapse to the target means.
    """
    X = np.asarray(features, dtype=np.float64)
    Y = np.asarray(targets, dtype=np.float64)
    _check_ridge_inputs(X, Y, alpha)
    if alpha == 0.0:
        w, *_ = np.linalg.lstsq(X, Y, rcond=None)
    else:
        gram = X.T @ X + alpha * np.eye(X.shape[1])
        w = np.linalg.solve(gram, X.T @ Y)
    bias = (Y - X @ w).mean(axis=0)
    return RidgeModel(weights=w.T, bias=bias, alpha=alpha, feature_mode=feature_mode)


def fit_ridge_path(features: np.ndarray, targets: np.ndarray, alphas, feature_mode: str = "raw") -> list[RidgeModel]:
    """One model per alpha, sharing a single Gram-matrix computation."""
    X = np.asarray(features, dtype=np.float64)
    Y = np.asarray(targets, dtype=np.float64)
    models = []
    gram = None
    xty = None
    for alpha in alphas:
        _check_ridge_inputs(X, Y, alpha)
        if alpha == 0.0:
            w, *_ = np.linalg.lstsq(X, Y, rcond=None)
        else:
            if gram is None:
                gram = X.T @ X
                xty = X.T @ Y
            w = np.linalg.solve(gram + alpha * np.eye(X.shape[1]), xty)
        bias = (Y - X @ w).mean(axis=0)
        models.append(RidgeModel(weights=w.T, bias=bias, alpha=float(alpha),
                                 feature_mode=feature_mode))
    return models


def predict(model: RidgeModel, features: np.ndarray, offsets: np.ndarray | float = 0.0) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    offs = np.asarray(offsets, dtype=np.float64)
    if offs.ndim == 0:
        offs = np.full(X.shape[0], float(offs))
    return X @ model.weights.T + model.bias + offs[:, None]


def evaluate_predictions(predictions: np.ndarray, targets: np.ndarray) -> tuple[float, float]:
    """Mean squared and mean absolute error over all (window, horizon) cells."""
    P = np.asarray(predictions, dtype=np.float64)
    Y = np.asarray(targets, dtype=np.float64)
    if P.shape != Y.shape:
        raise InvalidInputError(f"prediction shape {P.shape} != target shape {Y.shape}")
    if P.size == 0:
        raise InsufficientDataError("no evaluation windows")
    err = P - Y
    return float(np.mean(err**2)), float(np.mean(np.abs(err)))


def _mode_data(split_values, mode, model, horizon_out, stride, ma_kernel):
    from .dataio import windows_matrix

    X_win, Y, _ = windows_matrix(
        split_values, model.config.window_length, horizon_out, stride
    )
    if X_win.shape[0] == 0:
        raise InsufficientDataError(
            f"split too short: need at least {model.config.window_length + horizon_out} rows"
        )
    feats, offsets = build_features(X_win, mode, model=model, ma_kernel=ma_kernel)
    return feats, offsets, Y


def run_eval(
    splits,
    model: pl.MlowModel,
    horizon_out: int,
    modes=FEATURE_MODES,
    alphas=ALPHA_GRID,
    stride: int = 1,
    ma_kernel: int = 24,
) -> dict[str, EvalReport]:
    """Fit each mode's ridge on train, pick alpha on val MSE, report on test.

    Targets are level-adjusted by each mode's offset during fitting and the
    offset is re-added to predictions, mirroring how the mean intercept is
    kept out of the features.
    """
    reports = {}
    for mode in modes:
        if mode not in FEATURE_MODES:
            raise InvalidInputError(f"unknown mode {mode!r}; expected subset of {FEATURE_MODES}")
        Xtr, otr, Ytr = _mode_data(splits.train.values, mode, model, horizon_out, stride, ma_kernel)
        Xva, ova, Yva = _mode_data(splits.val.values, mode, model, horizon_out, stride, ma_kernel)
        Xte, ote, Yte = _mode_data(splits.test.values, mode, model, horizon_out, stride, ma_kernel)
        best = None
        for ridge in fit_ridge_path(Xtr, Ytr - otr[:, None], alphas, feature_mode=mode):
            val_mse, _ = evaluate_predictions(predict(ridge, Xva, ova), Yva)
            if best is None or val_mse < best[0]:
                best = (val_mse, ridge)
        ridge = best[1]
        pred = predict(ridge, Xte, ote)
        mse, mae = evaluate_predictions(pred, Yte)
        err = pred - Yte
        reports[mode] = EvalReport(
            mse=mse,
            mae=mae,
            n_windows=Xte.shape[0],
            horizon=horizon_out,
            feature_mode=mode,
            alpha=ridge.alpha,
            per_horizon_mse=tuple(float(v) for v in (err**2).mean(axis=0)),
            per_horizon_mae=tuple(float(v) for v in np.abs(err).mean(axis=0)),
        )
        logger.info("mode %-4s alpha=%g test mse=%.6f mae=%.6f", mode, ridge.alpha, mse, mae)
    return reports
