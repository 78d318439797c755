"""Tempo perturbation by waveform-similarity overlap-add (WSOLA).

Duration changes by 1/factor while the spectral envelope (and so pitch) is
preserved. A factor above 1 speeds speech up (shorter output); below 1
slows it down.

The synthesis hop is fixed at half the block length (Hann overlap-add sums
to a constant there) and the analysis hop is ``round(synthesis_hop *
factor)``; this is the same stretch-ratio parameterization as scaling the
synthesis hop, but keeps the output window sum constant. Each analysis
block may slide by up to ``tolerance`` samples to maximize normalized
cross-correlation between its head and the natural continuation of the
previously committed block, which keeps periodic structure aligned in the
overlap regions.
"""

from dataclasses import dataclass

import numpy as np

from .audio import AudioBuffer
from .stft import make_window
from .validation import check_positive_int, check_range

TEMPO_FACTOR_MIN = 0.5
TEMPO_FACTOR_MAX = 2.0

# correlation is defined as 0 when either side has less energy than this
_ENERGY_FLOOR = 1e-12
# window-sum floor protecting the overlap-add normalization at the edges
_WINDOW_SUM_FLOOR = 1e-3


@dataclass(frozen=True)
class WsolaParams:
    """Block geometry for WSOLA. ``synthesis_hop`` is always frame_len // 2."""

    frame_len: int = 512
    tolerance: int = 128
    window: str = "hann"

    def __post_init__(self):
        check_positive_int("frame_len", self.frame_len)
        if self.frame_len % 2 != 0:
            raise ValueError(f"frame_len must be even, got {self.frame_len}")
        if not 0 <= self.tolerance <= self.synthesis_hop:
            raise ValueError(
                f"tolerance must be in [0, {self.synthesis_hop}], got {self.tolerance}"
            )

    @property
    def synthesis_hop(self) -> int:
        return self.frame_len // 2

    @property
    def overlap(self) -> int:
        return self.frame_len - self.synthesis_hop


def best_shift(candidate_region: np.ndarray, reference: np.ndarray, tolerance: int) -> int:
    """Shift in [-tolerance, +tolerance] maximizing normalized cross-correlation.

    ``candidate_region`` must hold ``2 * tolerance + len(reference)`` samples;
    the head of the candidate block for shift ``d`` is
    ``candidate_region[tolerance + d : tolerance + d + len(reference)]``.
    Ties break toward the smallest ``|d|``, then toward negative ``d``.
    """
    if tolerance < 0:
        raise ValueError(f"tolerance must be non-negative, got {tolerance}")
    reference = np.asarray(reference, dtype=np.float64)
    candidate_region = np.asarray(candidate_region, dtype=np.float64)
    length = len(reference)
    if length == 0:
        raise ValueError("reference must be non-empty")
    if len(candidate_region) < 2 * tolerance + length:
        raise ValueError(
            f"candidate region holds {len(candidate_region)} samples, "
            f"needs {2 * tolerance + length}"
        )
    if tolerance == 0:
        return 0

    n_shifts = 2 * tolerance + 1
    idx = np.arange(n_shifts)[:, None] + np.arange(length)[None, :]
    windows = candidate_region[idx]
    ref_energy = float(np.dot(reference, reference))
    energies = np.einsum("ij,ij->i", windows, windows)
    numerators = windows @ reference
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = numerators / np.sqrt(energies * ref_energy)
    corr[(energies < _ENERGY_FLOOR) | (ref_energy < _ENERGY_FLOOR)] = 0.0

    shifts = np.arange(-tolerance, tolerance + 1)
    order = np.lexsort((shifts > 0, np.abs(shifts)))  # 0, -1, +1, -2, +2, ...
    return int(shifts[order[np.argmax(corr[order])]])  # first max wins the tie


def tempo_perturb(buffer: AudioBuffer, factor: float,
                  params: WsolaParams | None = None) -> AudioBuffer:
    """Change duration by 1/factor with WSOLA; pitch is preserved.

    Output length is within ``frame_len`` of ``len(buffer) / factor``
    (actually within half a synthesis hop by construction).
    """
    params = params or WsolaParams()
    check_range("factor", factor, TEMPO_FACTOR_MIN, TEMPO_FACTOR_MAX)
    x = buffer.samples
    if len(x) < params.frame_len:
        raise ValueError(
            f"buffer ({len(x)} samples) is shorter than one block ({params.frame_len})"
        )

    hs = params.synthesis_hop
    ha = int(round(hs * factor))
    tol = params.tolerance
    win = make_window(params.window, params.frame_len)

    # pick the frame count from the target length: output is the multiple of
    # the synthesis hop closest to len(x) / factor
    n_frames = max(1, int(round(len(x) / (factor * hs))) - 1)
    total = (n_frames - 1) * hs + params.frame_len
    acc = np.zeros(total)
    wsum = np.zeros(total)

    # pad so candidate windows never leave the array: `tol` on the left for
    # negative shifts, a block plus tolerance of zeros on the right
    padded = np.concatenate([np.zeros(tol), x, np.zeros(params.frame_len + 2 * tol)])
    prev_start = 0  # adjusted analysis start of the previous block, in x coords
    for m in range(n_frames):
        nominal = m * ha
        if m == 0 or tol == 0:
            start = nominal  # first block is taken verbatim: no reference yet
        else:
            ref_lo = prev_start + hs + tol
            reference = padded[ref_lo : ref_lo + params.overlap]
            region = padded[nominal : nominal + 2 * tol + params.overlap]
            start = nominal + best_shift(region, reference, tol)
        block = padded[start + tol : start + tol + params.frame_len]
        lo = m * hs
        acc[lo : lo + params.frame_len] += block * win
        wsum[lo : lo + params.frame_len] += win
        prev_start = start

    out = acc / np.maximum(wsum, _WINDOW_SUM_FLOOR)
    return AudioBuffer(out, buffer.sample_rate_hz)
