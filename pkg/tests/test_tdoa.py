import numpy as np
import pytest

from farfield import AudioClip, estimate_array_delays, gcc_phat
from farfield.errors import DegenerateInputError, ShapeError


def brute_force_delay(ref, sig, max_delay):
    """Independent oracle: time-domain cross-correlation argmax."""
    best, best_lag = -np.inf, 0
    n = len(ref)
    for lag in range(-max_delay, max_delay + 1):
        if lag >= 0:
            value = np.dot(ref[: n - lag], sig[lag:])
        else:
            value = np.dot(ref[-lag:], sig[: n + lag])
        if value > best:
            best, best_lag = value, lag
    return best_lag


def shifted_pair(rng, n=16000, shift=5):
    base = rng.standard_normal(n + 128)
    ref = base[64 : 64 + n]
    sig = base[64 - shift : 64 - shift + n]  # sig(t) = ref(t - shift)
    return AudioClip(ref, 16000), AudioClip(sig, 16000)


def test_identical_signals_give_zero_delay(rng):
    clip = AudioClip(rng.standard_normal(8000), 16000)
    est = gcc_phat(clip, clip, max_delay=64)
    assert est.delay == pytest.approx(0.0, abs=1e-9)
    assert est.peak_value == pytest.approx(1.0, abs=1e-6)
    assert est.reliable


def test_integer_shift_recovered_and_matches_oracle(rng):
    ref, sig = shifted_pair(rng, shift=5)
    est = gcc_phat(ref, sig, max_delay=64)
    assert abs(est.delay - 5.0) <= 0.05
    oracle = brute_force_delay(ref.samples[0], sig.samples[0], 64)
    assert oracle == 5


def test_independent_noise_is_unreliable(rng):
    flags = []
    for _ in range(100):
        a = AudioClip(rng.standard_normal(4096), 16000)
        b = AudioClip(rng.standard_normal(4096), 16000)
        flags.append(gcc_phat(a, b, max_delay=64).reliable)
    assert not any(flags)


def test_zero_energy_is_degenerate():
    z = AudioClip(np.zeros(4096), 16000)
    with pytest.raises(DegenerateInputError):
        gcc_phat(z, z, max_delay=32)


def test_length_mismatch_rejected(rng):
    a = AudioClip(rng.standard_normal(4096), 16000)
    b = AudioClip(rng.standard_normal(4000), 16000)
    with pytest.raises(ShapeError):
        gcc_phat(a, b, max_delay=32)


def test_antisymmetry(rng):
    ref, sig = shifted_pair(rng, shift=9)
    fwd = gcc_phat(ref, sig, max_delay=64).delay
    bwd = gcc_phat(sig, ref, max_delay=64).delay
    assert abs(fwd + bwd) <= 0.1


def test_shift_equivariance(rng):
    base = rng.standard_normal(16000)
    ref = AudioClip(base, 16000)
    first = gcc_phat(ref, AudioClip(np.roll(base, 3), 16000), max_delay=64)
    second = gcc_phat(ref, AudioClip(np.roll(base, 10), 16000), max_delay=64)
    assert abs((second.delay - first.delay) - 7.0) <= 0.05
    assert abs(second.peak_value - first.peak_value) < 0.01


def test_array_delays_reference_entry_exact(rng):
    base = rng.standard_normal(16000)
    clip = AudioClip(np.stack([base, np.roll(base, 2), np.roll(base, 4)]), 16000)
    estimates = estimate_array_delays(clip, ref_channel=0, max_delay=64)
    assert estimates[0].delay == 0.0
    assert estimates[0].peak_value == 1.0
    assert estimates[0].reliable
    assert abs(estimates[1].delay - 2.0) <= 0.05
    assert abs(estimates[2].delay - 4.0) <= 0.05


def test_two_identical_channels(rng):
    base = rng.standard_normal(8000)
    clip = AudioClip(np.stack([base, base]), 16000)
    estimates = estimate_array_delays(clip, max_delay=32)
    assert [round(e.delay, 6) for e in estimates] == [0.0, 0.0]


def test_single_channel_rejected(rng):
    clip = AudioClip(rng.standard_normal(8000), 16000)
    with pytest.raises(ShapeError):
        estimate_array_delays(clip, max_delay=32)
