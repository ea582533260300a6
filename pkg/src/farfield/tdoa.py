"""Inter-channel delay estimation via generalized cross-correlation with
phase transform, feeding the delay-and-sum beamformer.

Sign convention: a positive delay means the second signal lags the
reference, i.e. other(t) = reference(t - delay).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import next_fast_len

from .audio_io import AudioClip
from .errors import DegenerateInputError, SampleRateError, ShapeError

# Floor applied to the cross-spectrum magnitude before phase whitening.
SPECTRAL_FLOOR = 1e-8

# Correlation peaks below this score mark the estimate unreliable.
RELIABLE_PEAK_THRESHOLD = 0.2


@dataclass(frozen=True)
class TdoaEstimate:
    delay: float
    peak_value: float
    reliable: bool


def _mono(clip: AudioClip, name: str) -> np.ndarray:
    if clip.num_channels != 1:
        raise ShapeError(f"{name} must be single-channel, got {clip.num_channels} channels")
    return clip.samples[0]


def gcc_phat(
    reference: AudioClip,
    other: AudioClip,
    max_delay: int,
    reliable_threshold: float = RELIABLE_PEAK_THRESHOLD,
) -> TdoaEstimate:
    """Estimate the delay of `other` relative to `reference`.

    The whitened cross-spectrum is inverted to a correlation whose peak over
    lags in [-max_delay, max_delay] gives the integer delay; a 3-point
    parabolic fit around the peak refines it to sub-sample precision. The
    peak of an ideal pure delay is 1.0, so peak_value acts as a confidence
    score in [0, 1].
    """
    ref = _mono(reference, "reference")
    sig = _mono(other, "other")
    if len(ref) != len(sig):
        raise ShapeError(f"signals must have equal length, got {len(ref)} vs {len(sig)}")
    if reference.sample_rate != other.sample_rate:
        raise SampleRateError(
            f"sample rates differ: {reference.sample_rate} vs {other.sample_rate}")
    if not (1 <= max_delay < len(ref) / 2):
        raise ShapeError(f"need 1 <= max_delay < length/2, got {max_delay} for length {len(ref)}")
    if not ref.any() or not sig.any():
        raise DegenerateInputError("zero-energy input, no correlation peak exists")

    n = next_fast_len(len(ref) + len(sig))
    spectrum = np.conj(np.fft.rfft(ref, n)) * np.fft.rfft(sig, n)
    whitened = spectrum / np.maximum(np.abs(spectrum), SPECTRAL_FLOOR)
    cc = np.fft.irfft(whitened, n)
    # Lags -max_delay..+max_delay; positive lag = `other` lags `reference`.
    lags = np.concatenate([cc[-max_delay:], cc[: max_delay + 1]])

    peak_idx = int(np.argmax(lags))
    delay = float(peak_idx - max_delay)
    peak = float(lags[peak_idx])
    if 0 < peak_idx < len(lags) - 1:
        left, mid, right = lags[peak_idx - 1], lags[peak_idx], lags[peak_idx + 1]
        denom = left - 2.0 * mid + right
        if abs(denom) > 1e-15:
            shift = 0.5 * (left - right) / denom
            delay += float(shift)
            peak = float(mid - 0.25 * (left - right) * shift)
    peak = float(np.clip(peak, 0.0, 1.0))
    return TdoaEstimate(delay=delay, peak_value=peak, reliable=peak >= reliable_threshold)


def estimate_array_delays(
    clip: AudioClip,
    ref_channel: int = 0,
    max_delay: int = 256,
    reliable_threshold: float = RELIABLE_PEAK_THRESHOLD,
) -> list[TdoaEstimate]:
    """Per-channel delays relative to the reference channel.

    The reference entry is exactly (0, 1, reliable) by construction.
    """
    if clip.num_channels < 2:
        raise ShapeError(f"need at least 2 channels, got {clip.num_channels}")
    if not (0 <= ref_channel < clip.num_channels):
        raise ShapeError(f"ref_channel {ref_channel} out of range for {clip.num_channels} channels")
    reference = clip.channel(ref_channel)
    estimates = []
    for ch in range(clip.num_channels):
        if ch == ref_channel:
            estimates.append(TdoaEstimate(delay=0.0, peak_value=1.0, reliable=True))
        else:
            estimates.append(gcc_phat(reference, clip.channel(ch), max_delay, reliable_threshold))
    return estimates
