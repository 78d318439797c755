"""Mono waveform container and PCM WAV file I/O.

Conventions:

- 16-bit PCM samples map to ``s / 32768`` on read, so full-scale negative
  is exactly -1.0 and 32767 reads as 32767/32768.
- Writing quantizes on the same 1/32768 grid (``round(s * 32768)`` after
  clamping to [-1, 1], saturating at the int16 maximum 32767), so a
  write->read round trip is exact to one quantization step everywhere.
- Multichannel files are downmixed by the channel mean on read; output is
  always mono 16-bit little-endian PCM with the canonical 44-byte header.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .validation import as_sample_array, check_positive_int

_FMT_PCM = 1
_FMT_IEEE_FLOAT = 3


class UnsupportedWavError(ValueError):
    """Raised for WAV files we cannot decode (compressed or exotic codecs)."""


@dataclass(frozen=True)
class AudioBuffer:
    """Immutable mono audio: float64 samples at a fixed sample rate.

    Samples are dimensionless amplitudes, nominally in [-1, 1]. Duration is
    exactly ``len(samples) / sample_rate_hz`` seconds. Instances are safe to
    share across threads; treat the sample array as read-only.
    """

    samples: np.ndarray = field(repr=False)
    sample_rate_hz: int

    def __post_init__(self):
        object.__setattr__(self, "samples", as_sample_array(self.samples))
        check_positive_int("sample_rate_hz", self.sample_rate_hz)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sample_rate_hz


def _read_chunks(blob: bytes) -> dict:
    """Index the RIFF sub-chunks of a WAVE blob by id (first occurrence)."""
    if len(blob) < 12 or blob[0:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise UnsupportedWavError("not a RIFF/WAVE file")
    chunks = {}
    pos = 12
    while pos + 8 <= len(blob):
        cid = blob[pos : pos + 4]
        (size,) = struct.unpack_from("<I", blob, pos + 4)
        body = blob[pos + 8 : pos + 8 + size]
        chunks.setdefault(cid, body)
        pos += 8 + size + (size & 1)  # chunks are word-aligned
    return chunks


def read_wav(path) -> AudioBuffer:
    """Read a PCM WAV file into an AudioBuffer.

    Supports 16-bit integer and 32-bit IEEE float PCM, mono or multichannel
    (downmixed by channel mean). Raises FileNotFoundError for a missing
    file, UnsupportedWavError for compressed or unsupported codecs, and
    ValueError for zero-length audio.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    chunks = _read_chunks(blob)
    if b"fmt " not in chunks or b"data" not in chunks:
        raise UnsupportedWavError(f"missing fmt/data chunk in {path}")
    fmt = chunks[b"fmt "]
    if len(fmt) < 16:
        raise UnsupportedWavError(f"truncated fmt chunk in {path}")
    audio_format, n_channels, sample_rate, _, _, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if n_channels < 1:
        raise UnsupportedWavError(f"invalid channel count {n_channels} in {path}")

    data = chunks[b"data"]
    if (audio_format, bits) == (_FMT_PCM, 16):
        raw = np.frombuffer(data[: len(data) - len(data) % (2 * n_channels)], dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif (audio_format, bits) == (_FMT_IEEE_FLOAT, 32):
        raw = np.frombuffer(data[: len(data) - len(data) % (4 * n_channels)], dtype="<f4")
        samples = raw.astype(np.float64)
    else:
        raise UnsupportedWavError(
            f"unsupported codec in {path}: format tag {audio_format}, {bits}-bit "
            "(only 16-bit PCM and 32-bit float are supported)"
        )

    if n_channels > 1:
        samples = samples[: len(samples) - len(samples) % n_channels]
        samples = samples.reshape(-1, n_channels).mean(axis=1)
    if len(samples) == 0:
        raise ValueError(f"zero-length audio in {path}")
    return AudioBuffer(samples, int(sample_rate))


def write_wav(buffer: AudioBuffer, path) -> None:
    """Write an AudioBuffer as mono 16-bit PCM with the canonical 44-byte header.

    Samples are clamped to [-1, 1] and quantized by ``round(s * 32768)``,
    saturating at 32767. Raises ValueError for non-finite samples.
    """
    samples = buffer.samples
    if not np.all(np.isfinite(samples)):
        raise ValueError("cannot write non-finite samples")
    quantized = np.clip(
        np.rint(np.clip(samples, -1.0, 1.0) * 32768.0), -32768, 32767
    ).astype("<i2")
    data = quantized.tobytes()
    rate = buffer.sample_rate_hz
    header = b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, _FMT_PCM, 1, rate, rate * 2, 2, 16)
    header += b"data" + struct.pack("<I", len(data))
    with open(path, "wb") as fh:
        fh.write(header + data)
