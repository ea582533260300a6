import numpy as np
import pytest

from farfield import AudioClip


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)


def white_clip(rng, n_samples=16000, channels=1, sample_rate=16000, scale=0.1):
    return AudioClip(scale * rng.standard_normal((channels, n_samples)), sample_rate)


@pytest.fixture
def make_white_clip(rng):
    def factory(n_samples=16000, channels=1, sample_rate=16000, scale=0.1):
        return white_clip(rng, n_samples, channels, sample_rate, scale)
    return factory
