"""Scikit-learn style transformers wrapping the perturbation kernels.

Each transformer is stateless (``fit`` only validates parameters) and maps a
sequence of AudioBuffers to a list of perturbed AudioBuffers, so perturbations
compose with sklearn pipelines and parameter search utilities.
"""

from sklearn.base import BaseEstimator, TransformerMixin

from .audio import AudioBuffer
from .speed import ResamplerParams, speed_perturb
from .vtlp import WarpSpec, vtlp_perturb
from .wsola import WsolaParams, tempo_perturb


def _check_buffers(X):
    if isinstance(X, AudioBuffer):
        raise TypeError(
            "transform expects a sequence of AudioBuffer objects; wrap a single "
            "buffer in a list"
        )
    buffers = list(X)
    for item in buffers:
        if not isinstance(item, AudioBuffer):
            raise TypeError(f"expected AudioBuffer, got {type(item).__name__}")
    return buffers


class VtlpPerturber(BaseEstimator, TransformerMixin):
    """Frequency-axis warp by ``alpha``; signal duration is unchanged."""

    def __init__(self, alpha=1.0, boundary_hz=4800.0, frame_len=512, hop=128,
                 window="hann", preserve_rms=True):
        self.alpha = alpha
        self.boundary_hz = boundary_hz
        self.frame_len = frame_len
        self.hop = hop
        self.window = window
        self.preserve_rms = preserve_rms

    def fit(self, X=None, y=None):
        WarpSpec(self.alpha, self.boundary_hz)
        return self

    def transform(self, X):
        spec = WarpSpec(self.alpha, self.boundary_hz)
        return [
            vtlp_perturb(b, spec, self.frame_len, self.hop, self.window,
                         self.preserve_rms)
            for b in _check_buffers(X)
        ]


class TempoPerturber(BaseEstimator, TransformerMixin):
    """WSOLA time-scale change by 1/factor; pitch is unchanged."""

    def __init__(self, factor=1.0, frame_len=512, tolerance=128, window="hann"):
        self.factor = factor
        self.frame_len = frame_len
        self.tolerance = tolerance
        self.window = window

    def _params(self):
        return WsolaParams(self.frame_len, self.tolerance, self.window)

    def fit(self, X=None, y=None):
        self._params()
        return self

    def transform(self, X):
        params = self._params()
        return [tempo_perturb(b, self.factor, params) for b in _check_buffers(X)]


class SpeedPerturber(BaseEstimator, TransformerMixin):
    """Time-domain resampling by ``factor``; duration and pitch both change."""

    def __init__(self, factor=1.0, taps_per_side=32, kaiser_beta=12.0,
                 cutoff_scale=0.95):
        self.factor = factor
        self.taps_per_side = taps_per_side
        self.kaiser_beta = kaiser_beta
        self.cutoff_scale = cutoff_scale

    def _params(self):
        return ResamplerParams(self.taps_per_side, self.kaiser_beta, self.cutoff_scale)

    def fit(self, X=None, y=None):
        self._params()
        return self

    def transform(self, X):
        params = self._params()
        return [speed_perturb(b, self.factor, params) for b in _check_buffers(X)]
