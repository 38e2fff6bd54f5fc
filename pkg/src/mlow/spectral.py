"""Amplitude/phase extraction over a fixed window and phase-aware cosine bases.

A real window ``w`` of even length ``2K`` decomposes exactly as

    w[n] = (1/2K) * sum_{k=0..K} amp[k] * cos(pi*k*n/K - phase[k]),

with ``amp[k] = a_k * sqrt(r[k]^2 + i[k]^2)`` where ``r`` is the real part of
the un-normalized forward DFT, ``i`` the sine-transform part (``-Im`` of the
usual FFT), ``a_0 = a_K = 1`` and ``a_k = 2`` otherwise.  Level 0 carries the
window mean; levels 1..K carry the oscillatory content.  Restricting the
basis to the last ``T`` columns reconstructs the most recent ``T`` samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "SpectrumSample",
    "BasisMatrix",
    "compute_spectrum",
    "compute_spectra",
    "reconstruct_bases",
    "mean_intercept",
    "reconstruct_window",
]


@dataclass(frozen=True)
class SpectrumSample:
    """Amplitudes and phases of one window, levels 0..K.

    ``amplitudes[k] >= 0`` always; the sign of the window mean lives in
    ``phases[0]`` (0 for a nonnegative sum, pi for a negative one).  Phases
    are canonicalized to 0 wherever the amplitude is exactly 0, and lie in
    (-pi, pi].
    """

    amplitudes: np.ndarray
    phases: np.ndarray
    window_length: int

    @property
    def levels(self) -> int:
        return self.amplitudes.shape[-1] - 1


@dataclass(frozen=True)
class BasisMatrix:
    """Cosine basis rows for levels 1..K at the last ``horizon`` timestamps.

    ``values[k-1, t] = (1/2K) * cos(pi*k*n/K - phase[k])`` with
    ``n = 2K - horizon + t`` (0-based sample index into the window).
    """

    values: np.ndarray
    window_length: int
    horizon: int


def _validate_window(window: np.ndarray) -> np.ndarray:
    w = np.asarray(window, dtype=np.float64)
    if w.ndim != 1:
        raise InvalidInputError(f"window must be 1-D, got shape {w.shape}")
    if w.size < 2 or w.size % 2 != 0:
        raise InvalidInputError(f"window length must be even and >= 2, got {w.size}")
    if not np.all(np.isfinite(w)):
        raise InvalidInputError("window contains non-finite values")
    return w


def _amp_weights(levels: int) -> np.ndarray:
    a = np.full(levels + 1, 2.0)
    a[0] = 1.0
    a[levels] = 1.0
    return a


def compute_spectrum(window: np.ndarray) -> SpectrumSample:
    """Extract the one-sided amplitude/phase representation of one window."""
    w = _validate_window(window)
    amp, ph = _spectrum_arrays(w[None, :])
    return SpectrumSample(amplitudes=amp[0], phases=ph[0], window_length=w.size)


def compute_spectra(windows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batch variant of :func:`compute_spectrum` over rows.

    Returns (amplitudes, phases), each of shape (n_windows, K+1).  Rows are
    independent; the result does not depend on row order.
    """
    W = np.asarray(windows, dtype=np.float64)
    if W.ndim != 2 or W.shape[1] < 2 or W.shape[1] % 2 != 0:
        raise InvalidInputError(f"windows must be 2-D with even row length, got {W.shape}")
    if not np.all(np.isfinite(W)):
        raise InvalidInputError("windows contain non-finite values")
    return _spectrum_arrays(W)


def _spectrum_arrays(W: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    K = W.shape[1] // 2
    F = np.fft.rfft(W, axis=1)
    r = F.real
    # Sine-transform convention: i[k] = sum_n w[n] sin(2 pi k n / 2K).  This is
    # the sign under which cos(pi k n / K - atan2(i, r)) reconstructs exactly.
    i = -F.imag
    # Bins 0 and K are purely real for real input; force +0.0 so atan2 of a
    # negative real part yields +pi, keeping phases in (-pi, pi].
    i[:, 0] = 0.0
    i[:, K] = 0.0
    mag = np.hypot(r, i)
    amp = _amp_weights(K)[None, :] * mag
    ph = np.arctan2(i, r)
    ph[mag == 0.0] = 0.0
    return amp, ph


def reconstruct_bases(sample: SpectrumSample, horizon: int) -> BasisMatrix:
    """Cosine basis rows k = 1..K at the last ``horizon`` window positions.

    Level 0 is excluded; its constant contribution comes from
    :func:`mean_intercept`.
    """
    K = sample.levels
    two_k = sample.window_length
    if not 1 <= horizon <= two_k:
        raise InvalidInputError(f"horizon must be in [1, {two_k}], got {horizon}")
    values = _basis_block(sample.phases[None, :], two_k, horizon)[0]
    return BasisMatrix(values=values, window_length=two_k, horizon=horizon)


def _basis_block(phases: np.ndarray, window_length: int, horizon: int) -> np.ndarray:
    """(n_samples, K, horizon) basis tensor for rows of ``phases``."""
    K = window_length // 2
    n = np.arange(window_length - horizon, window_length, dtype=np.float64)
    k = np.arange(1, K + 1, dtype=np.float64)
    angle = (np.pi / K) * k[:, None] * n[None, :]
    return np.cos(angle[None, :, :] - phases[:, 1:, None]) / window_length


def mean_intercept(sample: SpectrumSample, horizon: int) -> np.ndarray:
    """Signed window mean broadcast to ``horizon`` samples.

    ``amplitudes[0]`` stores |sum(window)|; ``phases[0]`` is 0 or pi and
    carries the sign, so the mean is ``amp[0]*cos(-phase[0]) / 2K``.
    """
    mean = sample.amplitudes[0] * np.cos(sample.phases[0]) / sample.window_length
    return np.full(horizon, mean)


def reconstruct_window(sample: SpectrumSample, horizon: int | None = None) -> np.ndarray:
    """Rebuild the window (or its last ``horizon`` samples) from the spectrum.

    The sum over levels is always reduced at full window length and then
    sliced: BLAS reductions depend on operand shape, and slicing is the only
    way a truncated reconstruction is bit-identical to the tail of the full
    one.
    """
    two_k = sample.window_length
    if horizon is None:
        horizon = two_k
    if not 1 <= horizon <= two_k:
        raise InvalidInputError(f"horizon must be in [1, {two_k}], got {horizon}")
    basis = _basis_block(sample.phases[None, :], two_k, two_k)[0]
    full = sample.amplitudes[1:] @ basis + mean_intercept(sample, two_k)
    return full[two_k - horizon:]
