"""End-to-end fit/transform: spectra collection, factorization, decomposition.

Training slides a length-``2K`` window over every channel of the training
split, pools all amplitude rows into one matrix and fits the chosen
factorizer.  Transforming a window splits it into ``rank`` additive pieces,
a residual and the mean intercept; the pieces cover only the most recent
``horizon`` samples while the earlier ``2K - horizon`` samples serve purely
to sharpen the spectrum.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass

import numpy as np

from . import factorization as fz
from . import spectral
from .errors import InsufficientDataError, InvalidInputError
from .factorization import ComponentMatrix, SpectraMatrix

__all__ = [
    "MlowConfig",
    "Decomposition",
    "MlowModel",
    "collect_training_spectra",
    "fit",
    "fit_from_spectra",
    "transform",
    "decompose_batch",
    "moving_average_decompose",
    "export_component_report",
    "model_to_json",
    "model_from_json",
    "save_model",
    "load_model",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MlowConfig:
    """Pipeline hyperparameters; defaults follow the reference setup."""

    horizon: int = 96            # T, modeled samples per window
    freq_levels: int = 168       # K, spectrum levels (window length is 2K)
    rank: int = 10               # V, number of learned components
    iterations: int = 1000       # F, factorizer iterations
    lam: float = 20.0            # diversity penalty weight
    method: str = "hyperplane_nmf"
    seed: int = 0
    stride: int = 1              # training-window sampling stride

    def __post_init__(self):
        if self.horizon < 1:
            raise InvalidInputError(f"horizon must be >= 1, got {self.horizon}")
        if self.freq_levels < 1:
            raise InvalidInputError(f"freq_levels must be >= 1, got {self.freq_levels}")
        if 2 * self.freq_levels < self.horizon:
            raise InvalidInputError(
                f"window 2K = {2 * self.freq_levels} is shorter than horizon T = {self.horizon}"
            )
        if not 1 <= self.rank <= self.freq_levels:
            raise InvalidInputError(
                f"rank must be in [1, freq_levels={self.freq_levels}], got {self.rank}"
            )
        if self.iterations < 1:
            raise InvalidInputError(f"iterations must be >= 1, got {self.iterations}")
        if self.lam < 0.0:
            raise InvalidInputError(f"lam must be >= 0, got {self.lam}")
        if self.method not in fz.METHODS:
            raise InvalidInputError(f"method must be one of {fz.METHODS}, got {self.method!r}")
        if self.stride < 1:
            raise InvalidInputError(f"stride must be >= 1, got {self.stride}")

    @property
    def window_length(self) -> int:
        return 2 * self.freq_levels


@dataclass(frozen=True)
class Decomposition:
    """Additive split of a window's last ``horizon`` samples.

    ``pieces[v] = coefficients[v] * bases[v]`` elementwise, and
    ``pieces.sum(axis=0) + residual + mean`` reproduces the input tail.
    """

    pieces: np.ndarray        # (rank, horizon)
    residual: np.ndarray      # (horizon,)
    mean: np.ndarray          # (horizon,) constant
    coefficients: np.ndarray  # (rank,)
    bases: np.ndarray         # (rank, horizon)


@dataclass(frozen=True)
class MlowModel:
    config: MlowConfig
    components: ComponentMatrix
    fit_metadata: dict


def _as_channels(series) -> np.ndarray:
    """Coerce to (length, n_channels) float array."""
    X = np.asarray(series, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InvalidInputError(f"series must be 1-D or 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("series contains non-finite values")
    return X


def collect_training_spectra(train_series, config: MlowConfig) -> SpectraMatrix:
    """Amplitude rows of every valid window, pooled across channels.

    Rows are ordered channel-major, offset-minor; at stride 1 there are
    ``(length - 2K) * n_channels`` rows.  Windows shorter than ``2K`` at the
    series start are skipped entirely, never padded.
    """
    X = _as_channels(train_series)
    window = config.window_length
    length, n_channels = X.shape
    if length <= window:
        raise InsufficientDataError(
            f"training split of length {length} has no window of length {window} "
            f"with a successor sample; need length > {window}"
        )
    offsets = np.arange(0, length - window, config.stride)
    rows = []
    for c in range(n_channels):
        windows = np.lib.stride_tricks.sliding_window_view(X[:, c], window)[offsets]
        amp, _ = spectral.compute_spectra(windows)
        rows.append(amp)
    return SpectraMatrix(values=np.vstack(rows), n_channels=n_channels)


def fit(train_series, config: MlowConfig) -> MlowModel:
    """Collect training spectra and fit the configured factorizer."""
    return fit_from_spectra(collect_training_spectra(train_series, config), config)


def fit_from_spectra(spectra: SpectraMatrix, config: MlowConfig) -> MlowModel:
    """Fit the configured factorizer on already-collected spectra."""
    start = time.perf_counter()
    components = fz.fit_components(
        spectra,
        method=config.method,
        rank=config.rank,
        iterations=config.iterations,
        lam=config.lam,
        seed=config.seed,
    )
    wall = time.perf_counter() - start
    meta = {
        "n_training_spectra": spectra.n_samples,
        "channels": spectra.n_channels,
        "seed": config.seed,
        "wall_time_s": wall,
    }
    logger.info(
        "fitted %s rank=%d on %d spectra in %.2fs",
        config.method, config.rank, spectra.n_samples, wall,
    )
    return MlowModel(config=config, components=components, fit_metadata=meta)


def transform(model: MlowModel, window) -> Decomposition:
    """Decompose one window of length ``2K`` into pieces/residual/mean."""
    w = np.asarray(window, dtype=np.float64)
    expected = model.config.window_length
    if w.ndim != 1 or w.size != expected:
        raise InvalidInputError(f"window must have length {expected}, got shape {w.shape}")
    T = model.config.horizon
    sample = spectral.compute_spectrum(w)
    amplitude_row = sample.amplitudes[1:][None, :]
    coeffs = fz.infer_coefficients(amplitude_row, model.components)[0]
    basis = spectral.reconstruct_bases(sample, T).values
    bases = model.components.values @ basis
    pieces = coeffs[:, None] * bases
    mean = spectral.mean_intercept(sample, T)
    residual = w[expected - T:] - coeffs @ bases - mean
    return Decomposition(
        pieces=pieces, residual=residual, mean=mean, coefficients=coeffs, bases=bases
    )


def decompose_batch(model: MlowModel, windows) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized transform of many windows.

    Returns ``(pieces, residual, mean)`` with shapes
    ``(m, rank, horizon)``, ``(m, horizon)``, ``(m,)`` (mean is the scalar
    level).  Uses cos(a - b) = cos a cos b + sin a sin b so the per-window
    phase enters through two fixed basis matrices instead of per-window
    basis construction.
    """
    W = np.asarray(windows, dtype=np.float64)
    if W.ndim != 2 or W.shape[1] != model.config.window_length:
        raise InvalidInputError(
            f"windows must be (m, {model.config.window_length}), got {W.shape}"
        )
    two_k = model.config.window_length
    K = model.config.freq_levels
    T = model.config.horizon
    H = model.components.values
    amp, ph = spectral.compute_spectra(W)
    coeffs = fz.infer_coefficients(amp[:, 1:], model.components)

    n = np.arange(two_k - T, two_k, dtype=np.float64)
    k = np.arange(1, K + 1, dtype=np.float64)
    angle = (np.pi / K) * k[:, None] * n[None, :]
    cos_base = np.cos(angle) / two_k
    sin_base = np.sin(angle) / two_k

    m = W.shape[0]
    pieces = np.empty((m, H.shape[0], T))
    chunk = max(1, 8_388_608 // max(1, H.shape[0] * K))
    for lo in range(0, m, chunk):
        hi = min(m, lo + chunk)
        cos_ph = np.cos(ph[lo:hi, 1:])
        sin_ph = np.sin(ph[lo:hi, 1:])
        # P[i] = H @ B_i with B_i = diag(cos ph_i) cos_base + diag(sin ph_i) sin_base
        p = (H[None, :, :] * cos_ph[:, None, :]) @ cos_base
        p += (H[None, :, :] * sin_ph[:, None, :]) @ sin_base
        pieces[lo:hi] = coeffs[lo:hi, :, None] * p
    mean = amp[:, 0] * np.cos(ph[:, 0]) / two_k
    residual = W[:, two_k - T:] - pieces.sum(axis=1) - mean[:, None]
    return pieces, residual, mean


def moving_average_decompose(window, kernel: int = 24) -> tuple[np.ndarray, np.ndarray]:
    """Centered moving-mean trend with replicate edge padding; seasonal is the rest.

    For even kernels the left pad is ``(kernel-1)//2`` and the right pad
    ``kernel//2``, so the output length always matches the input.
    """
    w = np.asarray(window, dtype=np.float64)
    if w.ndim != 1:
        raise InvalidInputError(f"window must be 1-D, got shape {w.shape}")
    if not 1 <= kernel <= w.size:
        raise InvalidInputError(f"kernel must be in [1, {w.size}], got {kernel}")
    left = (kernel - 1) // 2
    right = kernel // 2
    padded = np.concatenate([np.full(left, w[0]), w, np.full(right, w[-1])])
    trend = np.convolve(padded, np.full(kernel, 1.0 / kernel), mode="valid")
    return trend, w - trend


def _nearest_rank_quantile(values: np.ndarray, q: float) -> np.ndarray:
    return np.quantile(values, q, axis=0, method="inverted_cdf")


def export_component_report(model: MlowModel, spectra: SpectraMatrix) -> dict:
    """Component weights plus the training-spectra distribution per level.

    Returns arrays ready for plotting: raw and unit-normalized component
    weights over levels 1..K, the pairwise cosine matrix of the components,
    and the per-level mean and 2.5%/97.5% nearest-rank quantiles of the
    training amplitudes.
    """
    H = model.components.values
    norms = np.maximum(np.linalg.norm(H, axis=1), fz.EPSILON)
    unit = H / norms[:, None]
    cosine = unit @ unit.T
    working = spectra.working
    return {
        "weights": H.copy(),
        "weights_normalized": unit,
        "cosine_matrix": cosine,
        "spectra_mean": working.mean(axis=0),
        "spectra_q025": _nearest_rank_quantile(working, 0.025),
        "spectra_q975": _nearest_rank_quantile(working, 0.975),
    }


def model_to_json(model: MlowModel) -> str:
    """Canonical JSON (sorted keys, no whitespace); floats round-trip exactly.

    Wall time is reported at fit time but deliberately left out of the file
    so re-running an identical fit yields byte-identical output.
    """
    cfg = model.config
    payload = {
        "config": {
            "horizon": cfg.horizon,
            "freq_levels": cfg.freq_levels,
            "rank": cfg.rank,
            "iterations": cfg.iterations,
            "lambda": cfg.lam,
            "method": cfg.method,
            "seed": cfg.seed,
            "stride": cfg.stride,
        },
        "components": fz.component_to_dict(model.components),
        "fit_metadata": {
            "n_training_spectra": model.fit_metadata.get("n_training_spectra"),
            "channels": model.fit_metadata.get("channels"),
            "seed": model.fit_metadata.get("seed"),
        },
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def model_from_json(text: str) -> MlowModel:
    payload = json.loads(text)
    cfg = payload["config"]
    config = MlowConfig(
        horizon=int(cfg["horizon"]),
        freq_levels=int(cfg["freq_levels"]),
        rank=int(cfg["rank"]),
        iterations=int(cfg["iterations"]),
        lam=float(cfg["lambda"]),
        method=cfg["method"],
        seed=int(cfg["seed"]),
        stride=int(cfg["stride"]),
    )
    components = fz.component_from_dict(payload["components"])
    if components.values.shape != (config.rank, config.freq_levels):
        raise InvalidInputError("component matrix shape does not match config rank/levels")
    return MlowModel(config=config, components=components, fit_metadata=dict(payload["fit_metadata"]))


def save_model(model: MlowModel, path) -> None:
    with open(path, "w") as fh:
        fh.write(model_to_json(model))
        fh.write("\n")


def load_model(path) -> MlowModel:
    with open(path) as fh:
        return model_from_json(fh.read())
