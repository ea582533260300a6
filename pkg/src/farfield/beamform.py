"""Delay-and-sum and mask-driven MVDR beamforming in the STFT domain.

Both beamformers fuse the mixture channels into one enhanced channel: DAS
phase-aligns the channels to a reference and averages, MVDR minimizes the
output power subject to unit gain toward the steering vector taken as the
principal eigenvector of the mask-weighted speech covariance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NumericError, ShapeError
from .stft import ComplexSpectrogram
from .tdoa import TdoaEstimate

# Relative diagonal loading applied to the noise covariance before the solve.
DIAGONAL_LOADING = 1e-6

MASK_ROLES = ("speech", "noise")


@dataclass(frozen=True)
class SteeringDelays:
    """Per-channel delays (samples, fractional allowed) relative to a reference."""

    delays: np.ndarray
    ref_channel: int = 0

    def __post_init__(self):
        arr = np.asarray(self.delays, dtype=np.float64)
        if arr.ndim != 1:
            raise ShapeError("delays must be a 1-D array, one entry per channel")
        if not (0 <= self.ref_channel < len(arr)):
            raise ShapeError(f"ref_channel {self.ref_channel} out of range for {len(arr)} delays")
        if arr[self.ref_channel] != 0.0:
            raise ShapeError("delay of the reference channel must be exactly 0")
        object.__setattr__(self, "delays", arr)

    @classmethod
    def from_estimates(cls, estimates: Sequence[TdoaEstimate], ref_channel: int = 0) -> "SteeringDelays":
        return cls(np.array([e.delay for e in estimates]), ref_channel)


@dataclass(frozen=True)
class TfMask:
    """Time-frequency weighting in [0, 1], indexed [frame][bin]."""

    values: np.ndarray
    role: str = "speech"

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeError(f"mask must be 2-D [frame][bin], got ndim={arr.ndim}")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ShapeError("mask values must lie in [0, 1]")
        if self.role not in MASK_ROLES:
            raise ShapeError(f"mask role must be one of {MASK_ROLES}")
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class BeamformerWeights:
    """Per-bin complex combination weights, indexed [bin][channel]."""

    w: np.ndarray
    ref_channel: int = 0

    def __post_init__(self):
        arr = np.asarray(self.w, dtype=np.complex128)
        if arr.ndim != 2:
            raise ShapeError("weights must be 2-D [bin][channel]")
        if not np.all(np.isfinite(arr)):
            raise NumericError("beamformer weights must be finite")
        object.__setattr__(self, "w", arr)


@dataclass(frozen=True)
class CovarianceEstimate:
    """Mask-weighted spatial covariances per bin, [bin][channel][channel].

    Bins whose mask summed to zero fall back to a uniform frame weighting
    and are flagged in the corresponding *_uniform_bins array.
    """

    speech: np.ndarray
    noise: np.ndarray
    speech_uniform_bins: np.ndarray
    noise_uniform_bins: np.ndarray


def _sum_channels(parts: np.ndarray) -> np.ndarray:
    # Accumulate in content order so channel relabeling cannot change rounding.
    order = sorted(range(parts.shape[0]), key=lambda i: parts[i].tobytes())
    total = parts[order[0]].copy()
    for i in order[1:]:
        total += parts[i]
    return total


def das(spec: ComplexSpectrogram, steering: SteeringDelays) -> ComplexSpectrogram:
    """Delay-and-sum: advance each channel by its delay (a pure phase ramp,
    exact for fractional delays) and average across channels."""
    if len(steering.delays) != spec.num_channels:
        raise ShapeError(
            f"{len(steering.delays)} delays for {spec.num_channels} channels")
    bins = np.arange(spec.num_bins)
    phase = np.exp(2j * np.pi * np.outer(steering.delays, bins) / spec.config.fft_len)
    aligned = spec.data * phase[:, np.newaxis, :]
    fused = _sum_channels(aligned) / spec.num_channels
    return ComplexSpectrogram(fused[np.newaxis], spec.config, spec.sample_rate, spec.num_samples)


def estimate_covariances(spec: ComplexSpectrogram, mask: TfMask) -> CovarianceEstimate:
    """Speech/noise spatial covariances weighted by the mask and 1-mask."""
    frames, bins = mask.values.shape
    if (frames, bins) != (spec.num_frames, spec.num_bins):
        raise ShapeError(
            f"mask shape {mask.values.shape} does not match spectrogram "
            f"({spec.num_frames}, {spec.num_bins})")
    speech_mask = mask.values if mask.role == "speech" else 1.0 - mask.values

    def weighted(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        per_bin = m.T.copy()  # [bin][frame]
        totals = per_bin.sum(axis=1)
        uniform = totals == 0.0
        per_bin[uniform] = 1.0
        totals[uniform] = frames
        cov = np.einsum("ft,itf,jtf->fij", per_bin, spec.data, np.conj(spec.data))
        return cov / totals[:, np.newaxis, np.newaxis], uniform

    speech, speech_uniform = weighted(speech_mask)
    noise, noise_uniform = weighted(1.0 - speech_mask)
    return CovarianceEstimate(speech, noise, speech_uniform, noise_uniform)


def mvdr_weights(
    cov_speech: np.ndarray,
    cov_noise: np.ndarray,
    ref_channel: int = 0,
    diagonal_loading: float = DIAGONAL_LOADING,
) -> BeamformerWeights:
    """Distortionless minimum-variance weights per bin.

    The steering vector is the principal eigenvector of the speech
    covariance, phase-normalized so its reference entry is real-positive.
    The noise covariance is loaded by diagonal_loading * mean eigenvalue
    before the solve; w^H d = 1 holds by construction.
    """
    cov_speech = np.asarray(cov_speech, dtype=np.complex128)
    cov_noise = np.asarray(cov_noise, dtype=np.complex128)
    if cov_speech.shape != cov_noise.shape or cov_speech.ndim != 3 \
            or cov_speech.shape[1] != cov_speech.shape[2]:
        raise ShapeError(f"covariances must both be [bin][M][M], got "
                         f"{cov_speech.shape} and {cov_noise.shape}")
    if not (np.all(np.isfinite(cov_speech)) and np.all(np.isfinite(cov_noise))):
        raise NumericError("covariance matrices contain non-finite entries")
    n_channels = cov_speech.shape[1]
    if not (0 <= ref_channel < n_channels):
        raise ShapeError(f"ref_channel {ref_channel} out of range for {n_channels} channels")

    try:
        _, eigvecs = np.linalg.eigh(cov_speech)
    except np.linalg.LinAlgError as e:
        raise NumericError(f"eigendecomposition of the speech covariance failed: {e}") from e
    steering = eigvecs[:, :, -1]
    ref = steering[:, ref_channel]
    rotation = np.where(np.abs(ref) > 0.0, np.conj(ref) / np.maximum(np.abs(ref), 1e-300), 1.0)
    steering = steering * rotation[:, np.newaxis]

    trace = np.trace(cov_noise, axis1=1, axis2=2).real
    loaded = cov_noise + (diagonal_loading * trace / n_channels)[:, np.newaxis, np.newaxis] \
        * np.eye(n_channels)
    try:
        numerator = np.linalg.solve(loaded, steering[:, :, np.newaxis])[:, :, 0]
    except np.linalg.LinAlgError as e:
        raise NumericError(f"noise covariance solve failed: {e}") from e
    denom = np.einsum("fi,fi->f", np.conj(steering), numerator)
    if np.any(np.abs(denom) == 0.0) or not np.all(np.isfinite(numerator)):
        raise NumericError("degenerate noise covariance produced non-finite weights")
    return BeamformerWeights(numerator / denom[:, np.newaxis], ref_channel)


def apply_weights(spec: ComplexSpectrogram, weights: BeamformerWeights) -> ComplexSpectrogram:
    """out(t, f) = w(f)^H y(t, f), returned as a single-channel spectrogram."""
    if weights.w.shape != (spec.num_bins, spec.num_channels):
        raise ShapeError(f"weights {weights.w.shape} do not match spectrogram "
                         f"({spec.num_bins} bins, {spec.num_channels} channels)")
    parts = np.conj(weights.w.T)[:, np.newaxis, :] * spec.data
    fused = _sum_channels(parts)
    return ComplexSpectrogram(fused[np.newaxis], spec.config, spec.sample_rate, spec.num_samples)
