"""WAV (RIFF) reading and writing for the supported PCM16 / float32 profile.

The codec is deliberately narrow: linear PCM 16-bit and IEEE float 32-bit,
the two encodings the pipeline exchanges. Anything else is rejected with
``UnsupportedEncodingError`` rather than guessed at, and truncated files are
a hard ``FormatError`` instead of a silent short read.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    FormatError,
    InvalidAudioError,
    ShapeError,
    UnsupportedEncodingError,
)

# Symmetric fixed-point scale: int16 sample k maps to k / 32768.
INT16_SCALE = 32768.0

_WAVE_FORMAT_PCM = 0x0001
_WAVE_FORMAT_IEEE_FLOAT = 0x0003
_WAVE_FORMAT_EXTENSIBLE = 0xFFFE

ENCODINGS = ("pcm16", "float32")


@dataclass(frozen=True)
class AudioClip:
    """Multichannel waveform, samples indexed [channel][sample] in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[np.newaxis, :]
        if arr.ndim != 2:
            raise ShapeError(f"samples must be 2-D [channel][sample], got ndim={arr.ndim}")
        if not isinstance(self.sample_rate, (int, np.integer)) or self.sample_rate <= 0:
            raise InvalidAudioError(f"sample_rate must be a positive integer, got {self.sample_rate!r}")
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def num_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def num_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.num_samples / self.sample_rate

    def channel(self, index: int) -> "AudioClip":
        return AudioClip(self.samples[index : index + 1].copy(), self.sample_rate)

    def segment(self, start: int, end: int) -> "AudioClip":
        if not (0 <= start < end <= self.num_samples):
            raise ShapeError(f"segment [{start}, {end}) out of range for {self.num_samples} samples")
        return AudioClip(self.samples[:, start:end].copy(), self.sample_rate)


def _require_finite(samples: np.ndarray, context: str) -> None:
    if not np.all(np.isfinite(samples)):
        raise InvalidAudioError(f"{context}: samples contain NaN or infinity")


def _parse_fmt(payload: bytes) -> tuple[int, int, int, int]:
    if len(payload) < 16:
        raise FormatError("fmt chunk shorter than 16 bytes")
    tag, channels, rate, _byte_rate, _block_align, bits = struct.unpack("<HHIIHH", payload[:16])
    if tag == _WAVE_FORMAT_EXTENSIBLE:
        # Actual format sits in the first two bytes of the SubFormat GUID.
        if len(payload) < 40:
            raise FormatError("extensible fmt chunk shorter than 40 bytes")
        tag = struct.unpack("<H", payload[24:26])[0]
    if channels < 1:
        raise FormatError("channel count must be >= 1")
    if rate < 1:
        raise FormatError("sample rate must be >= 1")
    return tag, channels, rate, bits


def read_audio(path: str | Path) -> AudioClip:
    """Read a PCM16 or float32 WAV file into a normalized AudioClip.

    int16 samples are scaled by 1/32768; float32 samples are taken as-is.
    Raises FormatError for malformed or truncated files and
    UnsupportedEncodingError for encodings outside the profile.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[0:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise FormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    offset = 12
    while offset + 8 <= len(raw):
        chunk_id = raw[offset : offset + 4]
        (size,) = struct.unpack("<I", raw[offset + 4 : offset + 8])
        body_start = offset + 8
        if body_start + size > len(raw):
            raise FormatError(f"{path}: truncated {chunk_id!r} chunk "
                              f"(declares {size} bytes, {len(raw) - body_start} available)")
        body = raw[body_start : body_start + size]
        if chunk_id == b"fmt ":
            fmt = _parse_fmt(body)
        elif chunk_id == b"data":
            data = body
        offset = body_start + size + (size & 1)  # chunks are word aligned

    if fmt is None:
        raise FormatError(f"{path}: missing fmt chunk")
    if data is None:
        raise FormatError(f"{path}: missing data chunk")

    tag, channels, rate, bits = fmt
    if tag == _WAVE_FORMAT_PCM and bits == 16:
        dtype, scale = np.dtype("<i2"), INT16_SCALE
    elif tag == _WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        dtype, scale = np.dtype("<f4"), 1.0
    else:
        raise UnsupportedEncodingError(
            f"{path}: format tag {tag} / {bits}-bit is not PCM16 or IEEE float32")

    frame_size = channels * dtype.itemsize
    if len(data) % frame_size != 0:
        raise FormatError(f"{path}: data chunk is not a whole number of frames")
    flat = np.frombuffer(data, dtype=dtype).astype(np.float64)
    samples = flat.reshape(-1, channels).T / scale
    if scale == 1.0:
        _require_finite(samples, str(path))
    return AudioClip(samples, rate)


def write_audio(clip: AudioClip, path: str | Path, encoding: str = "float32") -> None:
    """Write a clip as PCM16 or float32 WAV.

    PCM16 rounds to the nearest step of 1/32768 and clips to the int16
    range, so a round trip is exact to within one LSB. float32 round trips
    bit-exactly for float32-representable sample values.
    """
    if encoding not in ENCODINGS:
        raise UnsupportedEncodingError(f"unknown encoding {encoding!r}; expected one of {ENCODINGS}")
    _require_finite(clip.samples, "write_audio")

    interleaved = np.ascontiguousarray(clip.samples.T)
    if encoding == "pcm16":
        tag, bits = _WAVE_FORMAT_PCM, 16
        quantized = np.clip(np.rint(interleaved * INT16_SCALE), -32768, 32767)
        payload = quantized.astype("<i2").tobytes()
    else:
        tag, bits = _WAVE_FORMAT_IEEE_FLOAT, 32
        payload = interleaved.astype("<f4").tobytes()

    channels = clip.num_channels
    block_align = channels * bits // 8
    fmt = struct.pack("<HHIIHH", tag, channels, clip.sample_rate,
                      clip.sample_rate * block_align, block_align, bits)
    chunks = [b"fmt " + struct.pack("<I", len(fmt)) + fmt]
    if encoding == "float32":
        # fact chunk (sample frame count) is required for non-PCM encodings.
        chunks.append(b"fact" + struct.pack("<II", 4, clip.num_samples))
    if len(payload) % 2:
        chunks.append(b"data" + struct.pack("<I", len(payload)) + payload + b"\x00")
    else:
        chunks.append(b"data" + struct.pack("<I", len(payload)) + payload)

    body = b"WAVE" + b"".join(chunks)
    Path(path).write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
