"""Windowed forward/inverse STFT shared by all frequency-domain stages.

Analysis frames are reflect-padded by half a window on both ends so that
the inverse transform returns exactly the input length, which keeps later
stages sample-aligned. Reconstruction divides by the accumulated
window-product envelope, so any config passing the COLA check inverts to
machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioClip
from .errors import ConfigError, ShapeError, TooShortError

WINDOW_KINDS = ("hann", "sqrt-hann")

# Max relative ripple of the overlap-added analysis*synthesis window product.
COLA_TOLERANCE = 1e-10


def _window(kind: str, length: int) -> np.ndarray:
    # Periodic hann, so integer window_len/hop ratios overlap-add exactly.
    hann = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(length) / length)
    if kind == "hann":
        return hann
    if kind == "sqrt-hann":
        return np.sqrt(hann)
    raise ConfigError(f"window must be one of {WINDOW_KINDS}, got {kind!r}")


def cola_deviation(window_len: int, hop: int, kind: str) -> float:
    """Relative ripple of sum_t (w_analysis * w_synthesis)(n - t*hop)."""
    w = _window(kind, window_len)
    product = w * w
    sums = np.array([product[r::hop].sum() for r in range(hop)])
    mean = sums.mean()
    if mean <= 0.0:
        return np.inf
    return float((sums.max() - sums.min()) / mean)


@dataclass(frozen=True)
class StftConfig:
    window_len: int = 512
    hop: int = 128
    window: str = "hann"
    fft_len: int = 512

    def __post_init__(self):
        if self.window_len < 2 or self.hop < 1:
            raise ConfigError(f"need window_len >= 2 and hop >= 1, got {self.window_len}/{self.hop}")
        if self.fft_len < self.window_len:
            raise ConfigError(f"fft_len {self.fft_len} < window_len {self.window_len}")
        if self.window not in WINDOW_KINDS:
            raise ConfigError(f"window must be one of {WINDOW_KINDS}, got {self.window!r}")
        deviation = cola_deviation(self.window_len, self.hop, self.window)
        if deviation > COLA_TOLERANCE:
            raise ConfigError(
                f"(window={self.window}, window_len={self.window_len}, hop={self.hop}) violates "
                f"the constant-overlap-add condition (ripple {deviation:.3e} > {COLA_TOLERANCE:.0e})")

    @property
    def num_bins(self) -> int:
        return self.fft_len // 2 + 1

    @property
    def pad(self) -> int:
        return self.window_len // 2


STFT_PRESETS = {
    "hann-512-128": StftConfig(512, 128, "hann", 512),
    "sqrt-hann-512-128": StftConfig(512, 128, "sqrt-hann", 512),
    "hann-1024-256": StftConfig(1024, 256, "hann", 1024),
}

DEFAULT_STFT = STFT_PRESETS["hann-512-128"]


@dataclass(frozen=True)
class ComplexSpectrogram:
    """Complex STFT tensor indexed [channel][frame][bin]."""

    data: np.ndarray
    config: StftConfig
    sample_rate: int
    num_samples: int

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.complex128)
        if arr.ndim != 3:
            raise ShapeError(f"spectrogram must be 3-D [channel][frame][bin], got ndim={arr.ndim}")
        if arr.shape[2] != self.config.num_bins:
            raise ShapeError(
                f"bin count {arr.shape[2]} does not match fft_len/2+1 = {self.config.num_bins}")
        if not np.all(np.isfinite(arr)):
            raise ShapeError("spectrogram entries must be finite")
        object.__setattr__(self, "data", arr)

    @property
    def num_channels(self) -> int:
        return self.data.shape[0]

    @property
    def num_frames(self) -> int:
        return self.data.shape[1]

    @property
    def num_bins(self) -> int:
        return self.data.shape[2]

    def bin_frequencies_hz(self) -> np.ndarray:
        return np.arange(self.num_bins) * self.sample_rate / self.config.fft_len


def stft(clip: AudioClip, config: StftConfig = DEFAULT_STFT) -> ComplexSpectrogram:
    """Forward STFT of every channel.

    Frame count is floor((padded_len - window_len)/hop) + 1 where
    padded_len = num_samples + 2*(window_len//2); no further zero padding.
    """
    n = clip.num_samples
    if n < config.window_len:
        raise TooShortError(f"clip of {n} samples is shorter than the {config.window_len}-sample window")
    w = _window(config.window, config.window_len)
    padded = np.pad(clip.samples, [(0, 0), (config.pad, config.pad)], mode="reflect")
    frames = np.lib.stride_tricks.sliding_window_view(padded, config.window_len, axis=-1)
    frames = frames[:, :: config.hop, :]
    data = np.fft.rfft(frames * w, n=config.fft_len, axis=-1)
    return ComplexSpectrogram(data, config, clip.sample_rate, n)


def istft(spec: ComplexSpectrogram) -> AudioClip:
    """Inverse STFT via weighted overlap-add, trimmed to the original length."""
    cfg = spec.config
    n_channels, n_frames, _ = spec.data.shape
    w = _window(cfg.window, cfg.window_len)

    total = (n_frames - 1) * cfg.hop + cfg.window_len
    expected = spec.num_samples + 2 * cfg.pad
    if not (expected - cfg.hop < total + 1 and total <= expected + cfg.hop):
        # Loose bound: frame count must be consistent with num_samples.
        raise ShapeError(f"{n_frames} frames inconsistent with num_samples={spec.num_samples}")

    frames = np.fft.irfft(spec.data, n=cfg.fft_len, axis=-1)[:, :, : cfg.window_len]
    out = np.zeros((n_channels, total))
    envelope = np.zeros(total)
    for t in range(n_frames):
        lo = t * cfg.hop
        out[:, lo : lo + cfg.window_len] += frames[:, t, :] * w
        envelope[lo : lo + cfg.window_len] += w * w
    out /= np.maximum(envelope, 1e-12)

    start = cfg.pad
    end = start + spec.num_samples
    if end > total:
        raise ShapeError(f"cannot recover {spec.num_samples} samples from {n_frames} frames")
    return AudioClip(out[:, start:end], spec.sample_rate)
