"""Multichannel linear-prediction dereverberation (weighted prediction error).

Late reverberation is modeled per frequency bin as a linear prediction from
tap-stacked delayed frames of all channels and subtracted; prediction
coefficients and error weights are re-estimated alternately, so the
prediction-error objective is non-increasing across iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .audio_io import AudioClip
from .errors import ConfigError, TooShortError
from .stft import ComplexSpectrogram, StftConfig, istft, stft, DEFAULT_STFT


@dataclass(frozen=True)
class WpeConfig:
    taps: int = 10
    delay: int = 3
    iterations: int = 3
    psd_floor: float = 1e-10

    def __post_init__(self):
        if self.taps < 0:
            raise ConfigError(f"taps must be >= 0, got {self.taps}")
        if self.delay < 1:
            raise ConfigError(f"delay must be >= 1 frame, got {self.delay}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if self.psd_floor <= 0.0:
            raise ConfigError(f"psd_floor must be positive, got {self.psd_floor}")


@dataclass
class WpeDiagnostics:
    """Per-iteration objective values plus solver fallback count."""

    objective: list[float] = field(default_factory=list)
    loaded_solves: int = 0


def prediction_error_objective(estimate: np.ndarray, weights: np.ndarray) -> float:
    """sum over (bin, frame) of mean_channel |x|^2 / lambda + log lambda.

    `estimate` is [bin][channel][frame], `weights` the lambda array
    [bin][frame] the prediction was solved against.
    """
    power = np.mean(np.abs(estimate) ** 2, axis=1)
    return float(np.sum(power / weights + np.log(weights)))


def _stack_taps(data: np.ndarray, taps: int, delay: int) -> np.ndarray:
    # data: [bin][channel][frame] -> [bin][channel*taps][frame]
    bins, channels, frames = data.shape
    stacked = np.zeros((bins, channels * taps, frames), dtype=data.dtype)
    for k in range(taps):
        lag = k + delay
        if lag < frames:
            stacked[:, k * channels : (k + 1) * channels, lag:] = data[:, :, : frames - lag]
    return stacked


def _solve_prediction(gram: np.ndarray, cross: np.ndarray, diagnostics: WpeDiagnostics) -> np.ndarray:
    try:
        return np.linalg.solve(gram, cross)
    except np.linalg.LinAlgError:
        pass
    # Retry bin by bin, loading the singular ones.
    out = np.empty_like(cross)
    dim = gram.shape[1]
    for f in range(gram.shape[0]):
        try:
            out[f] = np.linalg.solve(gram[f], cross[f])
        except np.linalg.LinAlgError:
            load = max(np.trace(gram[f]).real / dim, 1.0) * 1e-10
            out[f] = np.linalg.solve(gram[f] + load * np.eye(dim), cross[f])
            diagnostics.loaded_solves += 1
    return out


def wpe_report(spec: ComplexSpectrogram, config: WpeConfig = WpeConfig()) \
        -> tuple[ComplexSpectrogram, WpeDiagnostics]:
    """Dereverberate and return per-iteration diagnostics.

    With taps == 0 the input is returned unchanged. Each iteration
    re-estimates the frame powers lambda from the current estimate (floored
    by psd_floor), solves the weighted normal equations for the prediction
    filters, and subtracts the prediction from the observation.
    """
    diagnostics = WpeDiagnostics()
    if config.taps == 0:
        return ComplexSpectrogram(spec.data.copy(), spec.config, spec.sample_rate,
                                  spec.num_samples), diagnostics
    if spec.num_frames <= config.taps + config.delay:
        raise TooShortError(
            f"{spec.num_frames} frames but taps + delay = {config.taps + config.delay}; "
            "need more frames than the prediction span")

    observed = spec.data.transpose(2, 0, 1)  # [bin][channel][frame]
    tapped = _stack_taps(observed, config.taps, config.delay)
    tapped_h = np.conj(tapped.transpose(0, 2, 1))
    observed_h = np.conj(observed.transpose(0, 2, 1))

    estimate = observed
    for _ in range(config.iterations):
        lam = np.maximum(np.mean(np.abs(estimate) ** 2, axis=1), config.psd_floor)
        normalized = tapped / lam[:, np.newaxis, :]
        gram = normalized @ tapped_h
        cross = normalized @ observed_h
        prediction = _solve_prediction(gram, cross, diagnostics)
        estimate = observed - np.conj(prediction.transpose(0, 2, 1)) @ tapped
        diagnostics.objective.append(prediction_error_objective(estimate, lam))

    data = estimate.transpose(1, 2, 0)
    return ComplexSpectrogram(data, spec.config, spec.sample_rate, spec.num_samples), diagnostics


def wpe(spec: ComplexSpectrogram, config: WpeConfig = WpeConfig()) -> ComplexSpectrogram:
    return wpe_report(spec, config)[0]


def wpe_time(clip: AudioClip, stft_config: StftConfig = DEFAULT_STFT,
             wpe_config: WpeConfig = WpeConfig()) -> AudioClip:
    """Time-domain convenience wrapper: stft -> wpe -> istft."""
    return istft(wpe(stft(clip, stft_config), wpe_config))
