"""Vocal tract length perturbation: frequency-axis warping of STFT frames.

The warp is piecewise linear with fixed endpoints: below the breakpoint the
source frequency for output bin ``f`` is ``alpha * f``; above it a linear
segment maps the breakpoint to the Nyquist frequency so no band is left
empty and no read falls outside the spectrum. Output length always equals
input length.

Each frame's complex spectrum is resampled along the frequency axis by
linear interpolation. Because a bin moved from ``g(f)`` to ``f`` must also
advance its phase at the new frequency for overlap-add resynthesis to be
coherent, every bin is additionally rotated by
``exp(2j*pi*(f - g(f)) * m * hop / fs)`` in frame ``m``. Without this
rotation the original phase progression pins tones to their source
frequency and the warp audibly fails.

Frequency warping is not energy preserving (interpolated neighbor bins add
incoherently on broadband content), so by default the output is rescaled to
the input RMS; disable with ``preserve_rms=False``.
"""

from dataclasses import dataclass

import numpy as np

from .audio import AudioBuffer
from .stft import Spectrogram, istft, stft
from .validation import check_positive, check_range


@dataclass(frozen=True)
class WarpSpec:
    """Warp factor and the frequency below which the warp is purely linear."""

    alpha: float
    boundary_hz: float = 4800.0

    def __post_init__(self):
        check_range("alpha", self.alpha, 0.5, 2.0)
        check_positive("boundary_hz", self.boundary_hz)

    def breakpoint_hz(self) -> float:
        """Output frequency where the linear segment ends: min(b, b/alpha)."""
        return min(self.boundary_hz, self.boundary_hz / self.alpha)


def warp_frequency(f, spec: WarpSpec, nyquist_hz: float):
    """Source frequency g(f) whose value populates output frequency ``f``.

    g is continuous, strictly increasing, and fixes 0 and the Nyquist
    frequency. Accepts scalars or arrays in [0, nyquist_hz].
    """
    if spec.boundary_hz >= nyquist_hz:
        raise ValueError(
            f"boundary_hz ({spec.boundary_hz}) must lie below Nyquist ({nyquist_hz})"
        )
    arr = np.asarray(f, dtype=np.float64)
    if np.any(arr < 0) or np.any(arr > nyquist_hz):
        raise ValueError(f"frequency outside [0, {nyquist_hz}]")
    bp = spec.breakpoint_hz()
    knee = spec.alpha * bp
    upper = knee + (arr - bp) * (nyquist_hz - knee) / (nyquist_hz - bp)
    out = np.where(arr <= bp, spec.alpha * arr, upper)
    return float(out) if np.isscalar(f) else out


def warp_spectrogram(spec_in: Spectrogram, warp: WarpSpec) -> Spectrogram:
    """Warp every frame of a spectrogram along the frequency axis."""
    nyquist = spec_in.sample_rate_hz / 2.0
    bin_hz = spec_in.sample_rate_hz / spec_in.frame_len
    f_out = np.arange(spec_in.n_bins) * bin_hz
    g = warp_frequency(f_out, warp, nyquist)

    pos = g / bin_hz
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, spec_in.n_bins - 1)
    t = pos - lo
    warped = spec_in.frames[:, lo] * (1.0 - t) + spec_in.frames[:, hi] * t

    # per-frame rotation keeping relocated bins phase-coherent across hops
    frame_idx = np.arange(len(spec_in.frames))
    rotation = np.exp(
        2j * np.pi * np.outer(frame_idx * spec_in.hop, f_out - g) / spec_in.sample_rate_hz
    )
    return Spectrogram(
        warped * rotation,
        spec_in.frame_len,
        spec_in.hop,
        spec_in.window,
        spec_in.sample_rate_hz,
        spec_in.n_samples,
    )


def vtlp_perturb(buffer: AudioBuffer, spec: WarpSpec, frame_len: int = 512,
                 hop: int = 128, window: str = "hann",
                 preserve_rms: bool = True) -> AudioBuffer:
    """Apply vocal tract length perturbation; output length equals input length."""
    if len(buffer) == 0:
        raise ValueError("cannot perturb an empty buffer")
    out = istft(warp_spectrogram(stft(buffer, frame_len, hop, window), spec))
    samples = out.samples
    if preserve_rms:
        in_rms = float(np.sqrt(np.mean(buffer.samples**2)))
        out_rms = float(np.sqrt(np.mean(samples**2)))
        if in_rms > 1e-12 and out_rms > 1e-12:
            samples = samples * (in_rms / out_rms)
    return AudioBuffer(samples, buffer.sample_rate_hz)
