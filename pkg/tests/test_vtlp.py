"""VTLP contracts: warp map geometry, duration invariance, tone relocation.

Tone placement is verified with an FFT-peak oracle at the analysis
resolution: the warp operates on 512-sample frames (31.25 Hz bins at
16 kHz), which bounds how precisely a relocated peak can be positioned.
"""

import numpy as np
import pytest

from speechaug.audio import AudioBuffer
from speechaug.signals import speech_shaped_noise, tone
from speechaug.vtlp import WarpSpec, vtlp_perturb, warp_frequency

from conftest import interior, peak_frequency_hz

FS = 16000
NYQUIST = FS / 2
ANALYSIS_BIN_HZ = FS / 512


def rel_rms(a, b):
    return np.sqrt(np.mean((a - b) ** 2) / np.mean(b**2))


class TestWarpSpec:
    def test_alpha_bounds(self):
        with pytest.raises(ValueError):
            WarpSpec(0.4)
        with pytest.raises(ValueError):
            WarpSpec(2.5)

    def test_boundary_positive(self):
        with pytest.raises(ValueError):
            WarpSpec(1.1, boundary_hz=0.0)


class TestWarpFrequency:
    def test_zero_is_fixed(self):
        for alpha in (0.85, 1.0, 1.15):
            assert warp_frequency(0.0, WarpSpec(alpha), NYQUIST) == 0.0

    def test_identity_alpha(self, rng):
        spec = WarpSpec(1.0)
        freqs = rng.uniform(0, NYQUIST, 50)
        np.testing.assert_allclose(warp_frequency(freqs, spec, NYQUIST), freqs, atol=1e-9)

    def test_linear_segment_below_breakpoint(self):
        # 1000 Hz is below the breakpoint for alpha=1.1, boundary 4800 Hz
        assert warp_frequency(1000.0, WarpSpec(1.1, 4800.0), 8000.0) == pytest.approx(1100.0)

    def test_nyquist_is_fixed(self):
        for alpha in (0.85, 0.9, 1.1, 1.15):
            g = warp_frequency(NYQUIST, WarpSpec(alpha), NYQUIST)
            assert g == pytest.approx(NYQUIST, abs=1e-9)

    def test_strictly_increasing_random_grids(self, rng):
        """Monotonicity and endpoint fixing over random warp factors."""
        for _ in range(25):
            alpha = rng.uniform(0.5, 2.0)
            spec = WarpSpec(alpha, boundary_hz=rng.uniform(1000, 7000))
            f = np.sort(rng.uniform(0, NYQUIST, 200))
            g = warp_frequency(f, spec, NYQUIST)
            assert np.all(np.diff(g) > 0)
            assert np.all(g >= -1e-12) and np.all(g <= NYQUIST + 1e-9)

    def test_rejects_out_of_range_frequency(self):
        with pytest.raises(ValueError, match="outside"):
            warp_frequency(9000.0, WarpSpec(1.1), NYQUIST)

    def test_rejects_boundary_at_nyquist(self):
        with pytest.raises(ValueError, match="Nyquist"):
            warp_frequency(100.0, WarpSpec(1.1, boundary_hz=8000.0), NYQUIST)


class TestVtlpPerturb:
    def test_identity_alpha_round_trip(self, speech_buffer):
        out = vtlp_perturb(speech_buffer, WarpSpec(1.0))
        assert len(out) == len(speech_buffer)
        assert rel_rms(out.samples, speech_buffer.samples) < 1e-6

    def test_duration_invariance(self, rng):
        """Output sample count equals input sample count exactly, always."""
        for alpha in (0.85, 0.9, 0.95, 1.05, 1.1, 1.15):
            n = int(rng.integers(9000, 40000))
            buf = speech_shaped_noise(n / FS, seed=int(rng.integers(1 << 30)))
            out = vtlp_perturb(buf, WarpSpec(alpha))
            assert len(out) == len(buf)

    def test_tone_moves_down_for_alpha_above_one(self):
        buf = tone(1000.0, 1.0)
        out = vtlp_perturb(buf, WarpSpec(1.1))
        assert len(out) == 16000
        peak = peak_frequency_hz(out.samples, FS)
        assert abs(peak - 1000.0 / 1.1) <= ANALYSIS_BIN_HZ

    def test_tone_moves_up_for_alpha_below_one(self):
        buf = tone(1000.0, 1.5)
        out = vtlp_perturb(buf, WarpSpec(0.9))
        peak = peak_frequency_hz(interior(out.samples, FS), FS)
        assert abs(peak - 1000.0 / 0.9) <= ANALYSIS_BIN_HZ

    def test_approximate_invertibility_below_breakpoint(self):
        buf = tone(1000.0, 1.5)
        once = vtlp_perturb(buf, WarpSpec(1.1))
        back = vtlp_perturb(once, WarpSpec(1 / 1.1))
        peak = peak_frequency_hz(interior(back.samples, FS), FS)
        assert abs(peak - 1000.0) <= ANALYSIS_BIN_HZ

    def test_energy_sanity_on_speech_shaped_noise(self):
        buf = speech_shaped_noise(2.0, seed=11)
        in_rms = np.sqrt(np.mean(buf.samples**2))
        for alpha in (0.85, 0.9, 1.1, 1.15):
            out = vtlp_perturb(buf, WarpSpec(alpha))
            ratio = np.sqrt(np.mean(out.samples**2)) / in_rms
            assert 0.5 < ratio < 2.0

    def test_empty_buffer_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            vtlp_perturb(AudioBuffer(np.array([]), FS), WarpSpec(1.1))
