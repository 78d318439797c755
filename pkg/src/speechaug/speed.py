"""Speed perturbation: band-limited time-domain resampling y(t) = x(alpha*t).

Both duration and spectral envelope change: output length is
``round(len / alpha)`` and a tone at f0 moves to ``alpha * f0``. The nominal
sample rate is kept unchanged (resample-then-relabel), which is what makes
this a speed change rather than a rate conversion.

Interpolation uses a Kaiser-windowed sinc kernel. For alpha > 1 the kernel
cutoff drops to ``cutoff_scale / alpha`` of Nyquist so the implicit low-pass
prevents aliasing. Factors that are simple rationals p/q run through a
polyphase FIR (scipy.signal.upfirdn) with the same kernel sampled on the
q-fold grid; other factors fall back to direct kernel evaluation per output
sample. Sample amplitudes are not rescaled: the 1/alpha factor that appears
in the Fourier-domain view of resampling describes spectral density, not
waveform gain.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.signal import upfirdn

from .audio import AudioBuffer
from .validation import check_range

SPEED_FACTOR_MIN = 0.5
SPEED_FACTOR_MAX = 2.0

# largest denominator still treated as an exact rational resampling ratio
_MAX_DENOMINATOR = 1000
_GATHER_CHUNK = 1 << 16


@dataclass(frozen=True)
class ResamplerParams:
    """Kaiser-windowed sinc kernel design."""

    taps_per_side: int = 32
    kaiser_beta: float = 12.0
    cutoff_scale: float = 0.95

    def __post_init__(self):
        if self.taps_per_side < 8:
            raise ValueError(f"taps_per_side must be >= 8, got {self.taps_per_side}")
        if not 0.0 < self.cutoff_scale <= 1.0:
            raise ValueError(f"cutoff_scale must be in (0, 1], got {self.cutoff_scale}")


def output_length(n_samples: int, factor: float) -> int:
    """Exact output length: round-half-up of n_samples / factor."""
    return int(np.floor(n_samples / factor + 0.5))


def _kernel(offsets: np.ndarray, factor: float, params: ResamplerParams) -> np.ndarray:
    """Interpolation kernel at the given offsets (input-sample units)."""
    cutoff = params.cutoff_scale * min(1.0, 1.0 / factor)  # in units of Nyquist
    taps = params.taps_per_side
    out = np.zeros_like(offsets, dtype=np.float64)
    inside = np.abs(offsets) <= taps
    u = offsets[inside]
    window = np.i0(params.kaiser_beta * np.sqrt(np.maximum(1.0 - (u / taps) ** 2, 0.0)))
    out[inside] = cutoff * np.sinc(cutoff * u) * window / np.i0(params.kaiser_beta)
    return out


def _resample_rational(x, factor, p, q, n_out, params):
    """Polyphase path: positions n * p/q on the q-fold upsampled grid."""
    half = params.taps_per_side * q
    half += (-half) % p  # pad so the group delay is a whole number of outputs
    grid = np.arange(-half, half + 1, dtype=np.float64) / q
    h = _kernel(grid, factor, params)
    y = upfirdn(h, x, up=q, down=p)
    offset = half // p
    y = y[offset : offset + n_out]
    if len(y) < n_out:
        y = np.concatenate([y, np.zeros(n_out - len(y))])
    return y


def _resample_direct(x, factor, n_out, params):
    """Fallback for irrational factors: evaluate the kernel per output sample."""
    taps = params.taps_per_side
    padded = np.concatenate([np.zeros(taps), x, np.zeros(taps + 2)])
    offsets = np.arange(-taps, taps + 1)
    out = np.empty(n_out)
    for lo in range(0, n_out, _GATHER_CHUNK):
        n = np.arange(lo, min(lo + _GATHER_CHUNK, n_out))
        pos = n * factor
        base = np.floor(pos).astype(np.int64)
        frac = pos - base
        weights = _kernel(offsets[None, :] - frac[:, None], factor, params)
        rows = padded[base[:, None] + offsets[None, :] + taps]
        out[n] = np.einsum("ij,ij->i", rows, weights)
    return out


def speed_perturb(buffer: AudioBuffer, factor: float,
                  params: ResamplerParams | None = None) -> AudioBuffer:
    """Resample by ``factor`` along the time axis, keeping the nominal rate."""
    params = params or ResamplerParams()
    check_range("factor", factor, SPEED_FACTOR_MIN, SPEED_FACTOR_MAX)
    x = buffer.samples
    if len(x) == 0:
        raise ValueError("cannot perturb an empty buffer")
    if factor == 1.0:
        return AudioBuffer(x.copy(), buffer.sample_rate_hz)

    n_out = output_length(len(x), factor)
    ratio = Fraction(factor).limit_denominator(_MAX_DENOMINATOR)
    if abs(float(ratio) - factor) <= 1e-12 * factor:
        out = _resample_rational(x, factor, ratio.numerator, ratio.denominator,
                                 n_out, params)
    else:
        out = _resample_direct(x, factor, n_out, params)
    return AudioBuffer(out, buffer.sample_rate_hz)
