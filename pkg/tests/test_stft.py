"""STFT/ISTFT contracts: framing, Parseval, round trips, linearity, COLA."""

import numpy as np
import pytest

from speechaug.audio import AudioBuffer
from speechaug.signals import harmonic_complex, tone, white_noise
from speechaug.stft import istft, make_window, stft


def rel_rms(a, b):
    return np.sqrt(np.mean((a - b) ** 2) / max(np.mean(b**2), 1e-300))


class TestStft:
    def test_bin_aligned_sine_peaks_at_its_bin(self):
        # 1000 Hz = bin 32 of a 512-point frame at 16 kHz
        buf = tone(1000.0, 0.5)
        spec = stft(buf, frame_len=512, hop=128)
        mags = np.abs(spec.frames)
        # skip the zero-padded edge frames
        for row in mags[8:-8]:
            assert np.argmax(row) == 32

    def test_all_zero_buffer(self):
        spec = stft(AudioBuffer(np.zeros(4000), 16000))
        assert np.all(spec.frames == 0)

    def test_frame_count_is_ceil_len_over_hop(self):
        spec = stft(AudioBuffer(np.zeros(1000), 16000), frame_len=512, hop=128)
        assert len(spec.frames) == int(np.ceil(1000 / 128))

    def test_parseval_rectangular_no_overlap(self, rng):
        """Framewise energy equality against a direct time-domain sum."""
        x = rng.standard_normal(4096)
        n_fft = 512
        spec = stft(AudioBuffer(x, 16000), frame_len=n_fft, hop=n_fft, window="rectangular")
        padded = np.concatenate([np.zeros(n_fft // 2), x, np.zeros(n_fft)])
        for m, frame in enumerate(spec.frames):
            time_energy = np.sum(padded[m * n_fft : (m + 1) * n_fft] ** 2)
            mags = np.abs(frame) ** 2
            freq_energy = (mags[0] + mags[-1] + 2 * np.sum(mags[1:-1])) / n_fft
            assert abs(time_energy - freq_energy) <= 1e-9 * max(time_energy, 1e-12)

    def test_linearity(self, rng):
        x = rng.standard_normal(3000)
        y = rng.standard_normal(3000)
        a, b = 0.7, -1.3
        sx = stft(AudioBuffer(x, 16000)).frames
        sy = stft(AudioBuffer(y, 16000)).frames
        sxy = stft(AudioBuffer(a * x + b * y, 16000)).frames
        np.testing.assert_allclose(sxy, a * sx + b * sy, atol=1e-9)

    def test_rejects_non_power_of_two_frame(self):
        with pytest.raises(ValueError, match="power of two"):
            stft(AudioBuffer(np.zeros(100), 16000), frame_len=500, hop=100)

    def test_rejects_hop_exceeding_frame(self):
        with pytest.raises(ValueError, match="exceed"):
            stft(AudioBuffer(np.zeros(100), 16000), frame_len=64, hop=128)

    def test_rejects_hop_not_dividing_frame(self):
        with pytest.raises(ValueError, match="divide"):
            stft(AudioBuffer(np.zeros(100), 16000), frame_len=512, hop=96)


class TestIstft:
    def test_round_trip_white_noise_hann_75(self):
        buf = white_noise(1.0, seed=3)
        out = istft(stft(buf, frame_len=512, hop=128))
        assert len(out) == len(buf)
        assert rel_rms(out.samples, buf.samples) < 1e-6

    def test_round_trip_harmonic(self):
        buf = harmonic_complex(220.0, 1.0, n_harmonics=5)
        out = istft(stft(buf, frame_len=512, hop=128))
        assert rel_rms(out.samples, buf.samples) < 1e-6

    def test_all_zero_spectrogram(self):
        spec = stft(AudioBuffer(np.zeros(2000), 16000))
        assert np.all(istft(spec).samples == 0)

    def test_non_cola_combination_raises(self):
        spec = stft(AudioBuffer(np.zeros(2000), 16000), frame_len=512, hop=512)
        with pytest.raises(ValueError, match="overlap-add"):
            istft(spec)

    @pytest.mark.parametrize(
        "frame_len,hop,window",
        [(512, 256, "hann"), (512, 128, "hann"), (512, 256, "rectangular"), (256, 64, "hann")],
    )
    def test_round_trip_all_cola_setups(self, rng, frame_len, hop, window):
        x = rng.standard_normal(9000)
        out = istft(stft(AudioBuffer(x, 16000), frame_len, hop, window))
        assert rel_rms(out.samples, x) < 1e-6


class TestWindow:
    def test_hann_is_periodic(self):
        w = make_window("hann", 512)
        assert w[0] == 0.0
        # periodic Hann at 50% overlap sums to exactly 1
        np.testing.assert_allclose(w[:256] + w[256:], 1.0, atol=1e-15)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="window kind"):
            make_window("hamming", 512)
