import numpy as np
import pytest

from speechaug.signals import speech_shaped_noise


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def speech_buffer():
    """Two seconds of band-limited speech-shaped noise at 16 kHz."""
    return speech_shaped_noise(2.0, seed=7)


def peak_frequency_hz(samples: np.ndarray, sample_rate_hz: int) -> float:
    """Frequency of the largest FFT magnitude (the tone-tracking oracle)."""
    spectrum = np.abs(np.fft.rfft(samples))
    return float(np.argmax(spectrum) * sample_rate_hz / len(samples))


def interior(samples: np.ndarray, sample_rate_hz: int, seconds: float = 1.0) -> np.ndarray:
    """A centered slice of the requested duration."""
    n = int(seconds * sample_rate_hz)
    lo = max((len(samples) - n) // 2, 0)
    return samples[lo : lo + n]
