"""speechaug: speech audio augmentation and a small adaptive acoustic model.

Three waveform perturbations (spectral-envelope warping, WSOLA tempo
scaling, time-domain speed resampling), speaker-rate factor estimation from
alignment files, a deterministic corpus augmentation pipeline, and a numpy
acoustic-model trainer with per-speaker LHUC adaptation.
"""

from .alignments import (
    AlignmentSegment,
    CtmParseError,
    FactorTable,
    SpeakerDurationStats,
    build_factor_table,
    load_factor_table,
    parse_ctm,
    save_factor_table,
    speaker_stats,
)
from .audio import AudioBuffer, UnsupportedWavError, read_wav, write_wav
from .estimators import SpeedPerturber, TempoPerturber, VtlpPerturber
from .nnet import (
    FrameBatch,
    LhucTable,
    NetworkConfig,
    forward,
    gradient_check,
    init_params,
    load_model,
    mtl_loss,
    save_model,
    splice_context,
)
from .pipeline import (
    GLOBAL_FACTOR_SETS,
    AugmentJob,
    RunResult,
    Summary,
    UtteranceRecord,
    build_plan,
    load_manifest,
    run_plan,
    save_manifest,
    summarize,
)
from .sat import HybridAcousticModel, adapt_test, evaluate_loss, train_sat
from .speed import ResamplerParams, output_length, speed_perturb
from .stft import Spectrogram, istft, make_window, stft
from .vtlp import WarpSpec, vtlp_perturb, warp_frequency
from .wsola import WsolaParams, best_shift, tempo_perturb

__version__ = "0.1.0"

__all__ = [
    "AlignmentSegment",
    "AudioBuffer",
    "AugmentJob",
    "CtmParseError",
    "FactorTable",
    "FrameBatch",
    "GLOBAL_FACTOR_SETS",
    "HybridAcousticModel",
    "LhucTable",
    "NetworkConfig",
    "ResamplerParams",
    "RunResult",
    "SpeakerDurationStats",
    "Spectrogram",
    "SpeedPerturber",
    "Summary",
    "TempoPerturber",
    "UnsupportedWavError",
    "UtteranceRecord",
    "VtlpPerturber",
    "WarpSpec",
    "WsolaParams",
    "adapt_test",
    "best_shift",
    "build_factor_table",
    "build_plan",
    "evaluate_loss",
    "forward",
    "gradient_check",
    "init_params",
    "istft",
    "load_factor_table",
    "load_manifest",
    "load_model",
    "make_window",
    "mtl_loss",
    "output_length",
    "parse_ctm",
    "run_plan",
    "save_factor_table",
    "save_manifest",
    "save_model",
    "speaker_stats",
    "speed_perturb",
    "splice_context",
    "stft",
    "summarize",
    "tempo_perturb",
    "train_sat",
    "vtlp_perturb",
    "warp_frequency",
    "write_wav",
]
