"""Short-time Fourier analysis and weighted overlap-add resynthesis.

Frames are centered: the signal is zero-padded by ``frame_len // 2`` on both
ends and frame ``m`` covers padded samples ``[m * hop, m * hop + frame_len)``,
so the frame count is exactly ``ceil(n_samples / hop)``. Resynthesis uses
squared-window overlap-add normalization, which reconstructs the input
exactly (up to FFT roundoff) for unmodified spectra and is the least-squares
inverse for modified ones.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import check_COLA

from .audio import AudioBuffer
from .validation import check_positive_int, check_power_of_two

WINDOW_KINDS = ("hann", "rectangular")


def make_window(kind: str, frame_len: int) -> np.ndarray:
    """Return the periodic analysis window of the given kind."""
    if kind == "hann":
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(frame_len) / frame_len)
    if kind == "rectangular":
        return np.ones(frame_len)
    raise ValueError(f"unknown window kind {kind!r}, expected one of {WINDOW_KINDS}")


@dataclass(frozen=True)
class Spectrogram:
    """One-sided complex STFT frames plus the analysis geometry.

    ``frames`` has one row per analysis frame and ``frame_len // 2 + 1``
    columns; bin ``k`` is centered at ``k * sample_rate_hz / frame_len`` Hz.
    ``n_samples`` records the source length so resynthesis is length-exact.
    """

    frames: np.ndarray = field(repr=False)
    frame_len: int
    hop: int
    window: str
    sample_rate_hz: int
    n_samples: int

    @property
    def n_bins(self) -> int:
        return self.frame_len // 2 + 1

    def bin_hz(self, k) -> float:
        return k * self.sample_rate_hz / self.frame_len


def stft(buffer: AudioBuffer, frame_len: int = 512, hop: int = 128,
         window: str = "hann") -> Spectrogram:
    """Short-time Fourier transform with centered, zero-padded frames.

    ``frame_len`` must be a power of two and ``hop`` must divide it.
    """
    check_power_of_two("frame_len", frame_len)
    check_positive_int("hop", hop)
    if hop > frame_len:
        raise ValueError(f"hop ({hop}) must not exceed frame_len ({frame_len})")
    if frame_len % hop != 0:
        raise ValueError(f"hop ({hop}) must divide frame_len ({frame_len})")

    x = buffer.samples
    win = make_window(window, frame_len)
    n_frames = int(np.ceil(len(x) / hop))
    pad = frame_len // 2
    padded = np.concatenate([np.zeros(pad), x, np.zeros(frame_len)])
    starts = np.arange(n_frames) * hop
    idx = starts[:, None] + np.arange(frame_len)[None, :]
    frames = np.fft.rfft(padded[idx] * win, axis=1)
    return Spectrogram(frames, frame_len, hop, window, buffer.sample_rate_hz, len(x))


def istft(spec: Spectrogram) -> AudioBuffer:
    """Weighted overlap-add inverse STFT.

    Requires a COLA-compliant window/hop pair (Hann at 50% or 75% overlap
    qualifies). Returns exactly ``spec.n_samples`` samples with the centering
    padding trimmed.
    """
    win = make_window(spec.window, spec.frame_len)
    if not check_COLA(win, spec.frame_len, spec.frame_len - spec.hop):
        raise ValueError(
            f"window {spec.window!r} with hop {spec.hop} of {spec.frame_len} "
            "does not satisfy constant overlap-add"
        )
    n_frames = len(spec.frames)
    pad = spec.frame_len // 2
    total = (max(n_frames, 1) - 1) * spec.hop + spec.frame_len
    acc = np.zeros(total)
    wsum = np.zeros(total)
    if n_frames:
        blocks = np.fft.irfft(spec.frames, spec.frame_len, axis=1) * win
        wsq = win * win
        for m in range(n_frames):
            lo = m * spec.hop
            acc[lo : lo + spec.frame_len] += blocks[m]
            wsum[lo : lo + spec.frame_len] += wsq
    out = acc / np.maximum(wsum, 1e-12)
    trimmed = out[pad : pad + spec.n_samples]
    if len(trimmed) < spec.n_samples:
        trimmed = np.concatenate([trimmed, np.zeros(spec.n_samples - len(trimmed))])
    return AudioBuffer(trimmed, spec.sample_rate_hz)
