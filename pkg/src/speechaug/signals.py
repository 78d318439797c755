"""Synthetic test-signal generators used by the test suite and demos."""

import numpy as np

from .audio import AudioBuffer


def tone(frequency_hz: float, duration_s: float, sample_rate_hz: int = 16000,
         amplitude: float = 0.5) -> AudioBuffer:
    """Pure sine tone."""
    n = int(round(duration_s * sample_rate_hz))
    t = np.arange(n) / sample_rate_hz
    return AudioBuffer(amplitude * np.sin(2.0 * np.pi * frequency_hz * t), sample_rate_hz)


def sawtooth(frequency_hz: float, duration_s: float, sample_rate_hz: int = 16000,
             amplitude: float = 0.5) -> AudioBuffer:
    """Naive sawtooth (harmonically rich, used for pitch-tracking tests)."""
    n = int(round(duration_s * sample_rate_hz))
    t = np.arange(n) / sample_rate_hz
    return AudioBuffer(amplitude * (2.0 * ((frequency_hz * t) % 1.0) - 1.0), sample_rate_hz)


def harmonic_complex(f0_hz: float, duration_s: float, sample_rate_hz: int = 16000,
                     n_harmonics: int = 5, amplitude: float = 0.5) -> AudioBuffer:
    """Sum of harmonics with 1/k rolloff, peak-normalized to ``amplitude``."""
    n = int(round(duration_s * sample_rate_hz))
    t = np.arange(n) / sample_rate_hz
    sig = np.zeros(n)
    for k in range(1, n_harmonics + 1):
        sig += np.sin(2.0 * np.pi * k * f0_hz * t + 0.37 * k) / k
    peak = np.max(np.abs(sig))
    if peak > 0:
        sig *= amplitude / peak
    return AudioBuffer(sig, sample_rate_hz)


def speech_shaped_noise(duration_s: float, sample_rate_hz: int = 16000, seed: int = 0,
                        amplitude: float = 0.3, highest_hz: float = 5500.0) -> AudioBuffer:
    """Noise with a 1/f-style spectral tilt, band-limited like voiced speech.

    Flat below 120 Hz, rolling off above, and zero above ``highest_hz`` so
    resampling tests are not dominated by content near Nyquist.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sample_rate_hz))
    spectrum = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate_hz)
    shape = 1.0 / np.maximum(freqs, 120.0)
    shape[freqs > highest_hz] = 0.0
    sig = np.fft.irfft(spectrum * shape, n)
    peak = np.max(np.abs(sig))
    if peak > 0:
        sig *= amplitude / peak
    return AudioBuffer(sig, sample_rate_hz)


def white_noise(duration_s: float, sample_rate_hz: int = 16000, seed: int = 0,
                amplitude: float = 0.3) -> AudioBuffer:
    n = int(round(duration_s * sample_rate_hz))
    rng = np.random.default_rng(seed)
    sig = rng.standard_normal(n)
    return AudioBuffer(amplitude * sig / max(np.max(np.abs(sig)), 1e-12), sample_rate_hz)
