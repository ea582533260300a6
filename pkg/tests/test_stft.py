import numpy as np
import pytest

from farfield import AudioClip, ComplexSpectrogram, STFT_PRESETS, StftConfig, istft, stft
from farfield.errors import ConfigError, ShapeError, TooShortError
from farfield.stft import cola_deviation, _window


def rel_l2(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_cola_violation_is_config_error():
    # hann analysis*synthesis product does not overlap-add at 50% hop
    with pytest.raises(ConfigError):
        StftConfig(window_len=512, hop=256, window="hann", fft_len=512)


def test_fft_len_must_cover_window():
    with pytest.raises(ConfigError):
        StftConfig(window_len=512, hop=128, window="hann", fft_len=256)


def test_shipped_presets_satisfy_cola():
    for cfg in STFT_PRESETS.values():
        assert cola_deviation(cfg.window_len, cfg.hop, cfg.window) <= 1e-10


def test_frame_count_formula(make_white_clip):
    cfg = StftConfig()
    for n in (512, 1000, 16000, 16001):
        clip = make_white_clip(n_samples=n)
        spec = stft(clip, cfg)
        padded = n + 2 * (cfg.window_len // 2)
        assert spec.num_frames == (padded - cfg.window_len) // cfg.hop + 1


def test_impulse_frame_matches_direct_dft():
    cfg = StftConfig()
    x = np.zeros(2048)
    x[0] = 1.0
    spec = stft(AudioClip(x, 16000), cfg)
    # Reproduce frame 0 by hand: reflect padding puts the impulse at index pad.
    w = _window(cfg.window, cfg.window_len)
    frame = np.zeros(cfg.window_len)
    frame[cfg.pad] = 1.0
    oracle = np.fft.rfft(frame * w, n=cfg.fft_len)
    np.testing.assert_allclose(spec.data[0, 0], oracle, atol=1e-12)
    # Flat magnitude equal to the window sample the impulse fell on.
    np.testing.assert_allclose(np.abs(spec.data[0, 0]), w[cfg.pad], atol=1e-12)


def test_bin_centered_sine_concentrates_energy():
    cfg = StftConfig()  # hann analysis: main lobe spans one neighbor bin
    sr = 16000
    bin_idx = 40
    freq = bin_idx * sr / cfg.fft_len
    t = np.arange(16000) / sr
    spec = stft(AudioClip(np.sin(2 * np.pi * freq * t), sr), cfg)
    mags = np.abs(spec.data[0])
    interior = mags[10:-10]  # reflect-padded edge frames see a phase flip
    peak = interior[:, bin_idx]
    outside = np.delete(interior, [bin_idx - 1, bin_idx, bin_idx + 1], axis=1)
    leakage_db = 20 * np.log10(outside.max() / peak.min())
    assert leakage_db < -60.0


def test_zero_input_gives_zero_spectrogram():
    spec = stft(AudioClip(np.zeros((2, 4000)), 16000))
    assert not spec.data.any()
    back = istft(spec)
    assert not back.samples.any()
    assert back.num_samples == 4000


@pytest.mark.parametrize("name", sorted(STFT_PRESETS))
def test_roundtrip_all_presets(name, make_white_clip):
    cfg = STFT_PRESETS[name]
    clip = make_white_clip(n_samples=16000, channels=2)
    back = istft(stft(clip, cfg))
    assert back.samples.shape == clip.samples.shape
    assert rel_l2(back.samples, clip.samples) <= 1e-6


def test_roundtrip_awkward_lengths(make_white_clip):
    for n in (512, 513, 999, 5000):
        clip = make_white_clip(n_samples=n)
        back = istft(stft(clip))
        assert back.num_samples == n
        assert rel_l2(back.samples, clip.samples) <= 1e-6


def test_multichannel_roundtrip_preserves_channels(make_white_clip):
    clip = make_white_clip(n_samples=8000, channels=5)
    back = istft(stft(clip))
    assert back.num_channels == 5
    assert rel_l2(back.samples, clip.samples) <= 1e-6


def test_linearity(make_white_clip):
    x = make_white_clip(n_samples=4000)
    y = make_white_clip(n_samples=4000)
    a, b = 0.7, -1.3
    combined = AudioClip(a * x.samples + b * y.samples, 16000)
    lhs = stft(combined).data
    rhs = a * stft(x).data + b * stft(y).data
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * np.max(np.abs(rhs))


def test_too_short_clip_rejected():
    with pytest.raises(TooShortError):
        stft(AudioClip(np.zeros((1, 100)), 16000), StftConfig())


def test_inconsistent_spectrogram_shape_rejected():
    cfg = StftConfig()
    with pytest.raises(ShapeError):
        ComplexSpectrogram(np.zeros((1, 4, 100), dtype=complex), cfg, 16000, 1000)


def test_istft_rejects_inconsistent_frame_count(make_white_clip):
    spec = stft(make_white_clip(n_samples=4000))
    with pytest.raises(ShapeError):
        istft(ComplexSpectrogram(spec.data[:, :3, :], spec.config, 16000, 4000))
