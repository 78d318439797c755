"""Speaker-rate factor estimation from phoneme-level alignment (CTM) files.

A CTM file carries one aligned token per line::

    utterance_id channel start_sec dur_sec phone

The speaker id is the utterance-id prefix up to the first underscore (the
``SPK_...`` naming convention), overridable with a regex whose first group
captures the speaker.

For each speaker we average the durations of non-silence phone tokens. The
mean of the control speakers' averages serves as the reference rate; each
target (dysarthric) speaker gets the factor

    factor = reference_mean_duration / speaker_mean_duration

so slower speakers receive factors below 1. Applying such a factor to
control speech through the tempo or speed perturbers stretches it toward
the slower target's speaking rate.
"""

import re
from dataclasses import dataclass

DEFAULT_SILENCE_LABELS = frozenset({"sil", "sp", "spn", "nsn"})
DEFAULT_SPEAKER_PATTERN = r"^([^_]+)_"


class CtmParseError(ValueError):
    """Malformed CTM content; the message names the offending line."""


@dataclass(frozen=True)
class AlignmentSegment:
    utterance_id: str
    speaker_id: str
    phone: str
    start: float
    duration: float


@dataclass(frozen=True)
class SpeakerDurationStats:
    speaker_id: str
    mean_phone_duration: float
    phone_count: int


@dataclass(frozen=True)
class FactorTable:
    """Per-speaker perturbation factors and the reference duration they derive from."""

    reference_duration: float
    entries: dict  # speaker_id -> factor


def parse_ctm(path, speaker_pattern: str = DEFAULT_SPEAKER_PATTERN) -> list[AlignmentSegment]:
    """Parse a CTM file into alignment segments.

    Blank lines are skipped. Raises CtmParseError (naming the line number)
    for lines without exactly five fields, unparseable numbers, negative
    start times, non-positive durations, or utterance ids the speaker
    pattern does not match.
    """
    pattern = re.compile(speaker_pattern)
    segments = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 5:
                raise CtmParseError(
                    f"{path}: line {line_no}: expected 5 fields "
                    f"(utt channel start dur phone), got {len(fields)}"
                )
            utterance_id, _channel, start_s, dur_s, phone = fields
            try:
                start = float(start_s)
                duration = float(dur_s)
            except ValueError as exc:
                raise CtmParseError(f"{path}: line {line_no}: {exc}") from None
            if start < 0:
                raise CtmParseError(f"{path}: line {line_no}: negative start time {start}")
            if duration <= 0:
                raise CtmParseError(
                    f"{path}: line {line_no}: non-positive duration {duration}"
                )
            match = pattern.match(utterance_id)
            if not match or not match.group(1):
                raise CtmParseError(
                    f"{path}: line {line_no}: cannot extract speaker from "
                    f"{utterance_id!r} with pattern {speaker_pattern!r}"
                )
            segments.append(
                AlignmentSegment(utterance_id, match.group(1), phone, start, duration)
            )
    return segments


def speaker_stats(segments, silence_labels=DEFAULT_SILENCE_LABELS) -> list[SpeakerDurationStats]:
    """Mean non-silence phone duration per speaker, sorted by speaker id.

    Speakers whose segments are all silence are omitted.
    """
    totals: dict[str, float] = {}
    counts: dict[str, int] = {}
    for seg in segments:
        if seg.phone in silence_labels:
            continue
        totals[seg.speaker_id] = totals.get(seg.speaker_id, 0.0) + seg.duration
        counts[seg.speaker_id] = counts.get(seg.speaker_id, 0) + 1
    return [
        SpeakerDurationStats(spk, totals[spk] / counts[spk], counts[spk])
        for spk in sorted(totals)
    ]


def build_factor_table(control_stats, dysarthric_stats) -> FactorTable:
    """Factors mapping control speech toward each target speaker's rate.

    The reference is the unweighted mean of the control speakers' mean
    durations (a mean of per-speaker means, not a pooled phone mean).
    """
    control_stats = list(control_stats)
    dysarthric_stats = list(dysarthric_stats)
    if not control_stats:
        raise ValueError("control speaker statistics must be non-empty")
    if not dysarthric_stats:
        raise ValueError("target speaker statistics must be non-empty")
    reference = sum(s.mean_phone_duration for s in control_stats) / len(control_stats)
    entries = {s.speaker_id: reference / s.mean_phone_duration for s in dysarthric_stats}
    return FactorTable(reference, entries)


def save_factor_table(table: FactorTable, path) -> None:
    """Persist as tab-separated ``speaker<TAB>factor`` with 6 decimal places."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# reference_duration_s: {table.reference_duration!r}\n")
        for speaker in sorted(table.entries):
            fh.write(f"{speaker}\t{table.entries[speaker]:.6f}\n")


def load_factor_table(path) -> FactorTable:
    """Read a factor table written by save_factor_table.

    Files without the reference comment load with reference NaN.
    """
    reference = float("nan")
    entries: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                match = re.search(r"reference_duration_s:\s*(\S+)", line)
                if match:
                    reference = float(match.group(1))
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ValueError(
                    f"{path}: line {line_no}: expected 'speaker<TAB>factor'"
                )
            entries[fields[0]] = float(fields[1])
    return FactorTable(reference, entries)
