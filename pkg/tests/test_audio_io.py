import struct

import numpy as np
import pytest

from farfield import AudioClip, read_audio, write_audio
from farfield.errors import (FormatError, InvalidAudioError, ShapeError,
                             UnsupportedEncodingError)


def test_clip_shape_and_rate_validation():
    with pytest.raises(ShapeError):
        AudioClip(np.zeros((2, 3, 4)), 16000)
    with pytest.raises(InvalidAudioError):
        AudioClip(np.zeros((1, 8)), 0)
    with pytest.raises(InvalidAudioError):
        AudioClip(np.zeros((1, 8)), -5)


def test_clip_1d_input_becomes_single_channel():
    clip = AudioClip(np.zeros(100), 16000)
    assert clip.samples.shape == (1, 100)
    assert clip.duration == pytest.approx(100 / 16000)


def test_header_echo_mono_16k(tmp_path):
    path = tmp_path / "x.wav"
    write_audio(AudioClip(np.zeros((1, 16000)), 16000), path, "pcm16")
    clip = read_audio(path)
    assert clip.samples.shape == (1, 16000)
    assert clip.sample_rate == 16000


def test_int16_fullscale_normalization(tmp_path):
    # Hand-build a minimal PCM16 file holding the single sample 32767.
    payload = struct.pack("<h", 32767)
    fmt = struct.pack("<HHIIHH", 1, 1, 16000, 32000, 2, 16)
    body = b"WAVE" + b"fmt " + struct.pack("<I", 16) + fmt \
        + b"data" + struct.pack("<I", len(payload)) + payload + b"\x00"
    path = tmp_path / "full.wav"
    path.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
    clip = read_audio(path)
    assert clip.samples[0, 0] == pytest.approx(32767 / 32768, abs=0)


def test_truncated_file_is_format_error(tmp_path):
    path = tmp_path / "t.wav"
    write_audio(AudioClip(np.zeros((1, 1000)), 16000), path, "pcm16")
    raw = path.read_bytes()
    path.write_bytes(raw[:-7])
    with pytest.raises(FormatError):
        read_audio(path)


def test_garbage_header_is_format_error(tmp_path):
    path = tmp_path / "g.wav"
    path.write_bytes(b"definitely not audio content")
    with pytest.raises(FormatError):
        read_audio(path)


def test_unsupported_bit_depth_rejected(tmp_path):
    fmt = struct.pack("<HHIIHH", 1, 1, 16000, 64000, 4, 32)  # PCM32
    payload = struct.pack("<i", 123456)
    body = b"WAVE" + b"fmt " + struct.pack("<I", 16) + fmt \
        + b"data" + struct.pack("<I", len(payload)) + payload
    path = tmp_path / "u.wav"
    path.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
    with pytest.raises(UnsupportedEncodingError):
        read_audio(path)


def test_float32_roundtrip_bit_exact(tmp_path, rng):
    samples = rng.standard_normal((3, 4000)).astype(np.float32).astype(np.float64)
    clip = AudioClip(samples, 16000)
    path = tmp_path / "f.wav"
    write_audio(clip, path, "float32")
    back = read_audio(path)
    assert back.sample_rate == 16000
    assert np.array_equal(back.samples, clip.samples)


def test_pcm16_roundtrip_within_one_lsb(tmp_path, rng):
    clip = AudioClip(rng.uniform(-1.0, 1.0, (2, 5000)), 16000)
    path = tmp_path / "q.wav"
    write_audio(clip, path, "pcm16")
    back = read_audio(path)
    assert np.max(np.abs(back.samples - clip.samples)) <= 2.0 ** -15


def test_nan_samples_rejected_on_write(tmp_path):
    clip = AudioClip(np.zeros((1, 16)), 16000)
    clip.samples[0, 3] = np.nan  # bypasses construction-time checks
    with pytest.raises(InvalidAudioError):
        write_audio(clip, tmp_path / "bad.wav", "float32")


def test_unknown_encoding_rejected(tmp_path):
    clip = AudioClip(np.zeros((1, 16)), 16000)
    with pytest.raises(UnsupportedEncodingError):
        write_audio(clip, tmp_path / "x.wav", "mulaw")


def test_multichannel_roundtrip_preserves_layout(tmp_path, rng):
    samples = np.vstack([np.full(64, 0.25), np.full(64, -0.5)])
    path = tmp_path / "mc.wav"
    write_audio(AudioClip(samples, 8000), path, "float32")
    back = read_audio(path)
    assert back.num_channels == 2
    assert np.allclose(back.samples[0], 0.25)
    assert np.allclose(back.samples[1], -0.5)


def test_scipy_written_files_are_readable(tmp_path):
    # Interop check against another writer's chunk layout.
    from scipy.io import wavfile
    path = tmp_path / "sp.wav"
    data = (np.linspace(-0.5, 0.5, 256, dtype=np.float32))
    wavfile.write(path, 16000, data)
    clip = read_audio(path)
    assert clip.num_channels == 1
    assert np.array_equal(clip.samples[0], data.astype(np.float64))
