"""Least-squares FIR matched filters mapping a close-talk (headset) signal
onto a far-field array channel.

The filter minimizes sum_t (f * h(t) - x(t))^2 over FIR coefficients f,
where h is the headset signal and x the array signal. Solving the Toeplitz
normal equations built from the headset autocorrelation and the
headset/array cross-correlation gives the FIR Wiener filter; applying it to
the headset segment yields a noise- and reverberation-free signal aligned
with the array recording, usable as an enhancement target.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import next_fast_len
from scipy.linalg import cho_factor, cho_solve, solve_toeplitz, toeplitz
from scipy.signal import fftconvolve

from .audio_io import AudioClip
from .errors import ConfigError, SampleRateError, ShapeError, SingularMatrixError, TooShortError

SOLVERS = ("dense", "levinson")


@dataclass(frozen=True)
class FirFilter:
    coeffs: np.ndarray
    regularization: float = 0.0

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ShapeError("filter coefficients must be a nonempty 1-D array")
        if not np.all(np.isfinite(arr)):
            raise ShapeError("filter coefficients must be finite")
        object.__setattr__(self, "coeffs", arr)

    def __len__(self) -> int:
        return len(self.coeffs)


@dataclass(frozen=True)
class AlignConfig:
    filter_len: int = 1024  # 64 ms at 16 kHz
    regularization: float = 0.0
    solver: str = "dense"

    def __post_init__(self):
        if self.filter_len < 1:
            raise ConfigError(f"filter_len must be >= 1, got {self.filter_len}")
        if self.regularization < 0.0:
            raise ConfigError(f"regularization must be >= 0, got {self.regularization}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {SOLVERS}, got {self.solver!r}")


def _correlations(headset: np.ndarray, array: np.ndarray, filter_len: int) \
        -> tuple[np.ndarray, np.ndarray]:
    # Zero-extended (autocorrelation method) lag sums via FFT.
    n = next_fast_len(len(headset) + filter_len)
    spectrum = np.fft.rfft(headset, n)
    auto = np.fft.irfft(spectrum * np.conj(spectrum), n)[:filter_len]
    cross = np.fft.irfft(np.fft.rfft(array, n) * np.conj(spectrum), n)[:filter_len]
    return auto, cross


def estimate_matched_filter(
    headset: AudioClip,
    array: AudioClip,
    filter_len: int = 1024,
    regularization: float = 0.0,
    solver: str = "dense",
) -> FirFilter:
    """Solve (R + reg*tr(R)/L * I) f = r for the matched filter f.

    R is the L x L Toeplitz autocorrelation matrix of the headset signal and
    r the headset-to-array cross-correlation vector. The dense path factors
    the loaded matrix as SPD; the Levinson path exploits the Toeplitz
    structure and agrees with the dense solve to high precision.
    """
    if headset.num_channels != 1 or array.num_channels != 1:
        raise ShapeError("matched filter estimation expects single-channel clips")
    if headset.sample_rate != array.sample_rate:
        raise SampleRateError(
            f"sample rates differ: {headset.sample_rate} vs {array.sample_rate}")
    h = headset.samples[0]
    x = array.samples[0]
    if len(h) != len(x):
        raise ShapeError(f"signals must have equal length, got {len(h)} vs {len(x)}")
    if len(h) < 4 * filter_len:
        raise TooShortError(
            f"{len(h)} samples is shorter than 4 * filter_len = {4 * filter_len}")
    if solver not in SOLVERS:
        raise ConfigError(f"solver must be one of {SOLVERS}, got {solver!r}")
    if regularization < 0.0:
        raise ConfigError(f"regularization must be >= 0, got {regularization}")

    auto, cross = _correlations(h, x, filter_len)
    loaded = auto.copy()
    loaded[0] *= 1.0 + regularization  # tr(R)/L == auto[0]

    try:
        if solver == "dense":
            factor = cho_factor(toeplitz(loaded))
            coeffs = cho_solve(factor, cross)
        else:
            coeffs = solve_toeplitz((loaded, loaded), cross)
    except np.linalg.LinAlgError as e:
        raise SingularMatrixError(
            f"normal equations are singular ({e}); pass regularization > 0") from e
    if not np.all(np.isfinite(coeffs)):
        raise SingularMatrixError(
            "normal equations are numerically singular; pass regularization > 0")
    return FirFilter(coeffs, regularization)


def apply_filter(fir: FirFilter, clip: AudioClip) -> AudioClip:
    """Full linear convolution truncated to the input length.

    The filter delay is preserved, not compensated, so the output stays
    aligned with whatever the filter was estimated against.
    """
    if clip.num_channels != 1:
        raise ShapeError(f"apply_filter expects a single channel, got {clip.num_channels}")
    full = fftconvolve(clip.samples[0], fir.coeffs)
    return AudioClip(full[np.newaxis, : clip.num_samples], clip.sample_rate)


def align_segment(
    headset_segment: AudioClip,
    array_segment: AudioClip,
    config: AlignConfig = AlignConfig(),
) -> AudioClip:
    """Filtered headset signal time-aligned to the array segment."""
    if headset_segment.num_samples < 4 * config.filter_len:
        raise TooShortError(
            f"segment of {headset_segment.num_samples} samples is shorter than "
            f"4 * filter_len = {4 * config.filter_len}")
    fir = estimate_matched_filter(
        headset_segment, array_segment,
        filter_len=config.filter_len,
        regularization=config.regularization,
        solver=config.solver,
    )
    return apply_filter(fir, headset_segment)
