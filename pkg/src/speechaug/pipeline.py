"""Corpus-level augmentation: planning, parallel execution, accounting.

Planning is pure and deterministic: the same manifest and configuration
always produce the identical job list (sorted by output id). Execution runs
jobs on a configurable worker pool; jobs share no mutable state, so output
trees are byte-identical for any worker count. Failures are collected per
job and never abort the batch.

Disordered (DYS) utterances receive every factor of a global factor set;
control (CTL) utterances are each assigned ``ctl_multiplicity`` distinct
target speakers (round-robin over targets sorted by id, offset by a stable
hash of the utterance id, so load per target is balanced) and use that
target's speaker-dependent factor. Outputs of control-to-target jobs are
attributed to the target speaker and the DYS group, which is what a
downstream per-speaker adaptation stage expects.
"""

import hashlib
import json
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from .alignments import FactorTable
from .audio import read_wav, write_wav
from .speed import ResamplerParams, speed_perturb
from .vtlp import WarpSpec, vtlp_perturb
from .wsola import WsolaParams, tempo_perturb

GROUP_CONTROL = "CTL"
GROUP_DYSARTHRIC = "DYS"
GROUPS = (GROUP_CONTROL, GROUP_DYSARTHRIC)

METHODS = ("vtlp", "tempo", "speed")

# global perturbation factor sets applied to disordered speech, keyed by the
# corpus multiplicity they produce
GLOBAL_FACTOR_SETS = {
    2: (0.9, 1.1),
    4: (0.9, 0.95, 1.05, 1.1),
    6: (0.85, 0.9, 0.95, 1.05, 1.1, 1.15),
}

_METHOD_ID_RE = re.compile(r"__(vtlp|tempo|speed)\d+\.\d{2}")


@dataclass(frozen=True)
class UtteranceRecord:
    utterance_id: str
    speaker_id: str
    group: str
    audio_path: str
    duration: float

    def __post_init__(self):
        if self.group not in GROUPS:
            raise ValueError(f"group must be one of {GROUPS}, got {self.group!r}")
        if not self.duration > 0:
            raise ValueError(f"duration must be positive, got {self.duration}")


@dataclass(frozen=True)
class AugmentJob:
    source: UtteranceRecord
    method: str
    factor: float
    target_speaker: str | None
    output_id: str


@dataclass
class RunResult:
    records: list
    failures: list  # (output_id, error message)

    @property
    def ok(self) -> bool:
        return not self.failures


@dataclass
class Summary:
    total_hours: float
    hours_by_group: dict
    hours_by_method: dict


def make_output_id(utterance_id: str, method: str, factor: float,
                   target_speaker: str | None = None) -> str:
    out = f"{utterance_id}__{method}{factor:.2f}"
    if target_speaker is not None:
        out += f"__to_{target_speaker}"
    return out


def _stable_offset(utterance_id: str, n_targets: int) -> int:
    digest = hashlib.sha256(utterance_id.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % n_targets


def _check_speaker_groups(manifest):
    seen: dict[str, str] = {}
    for rec in manifest:
        prev = seen.setdefault(rec.speaker_id, rec.group)
        if prev != rec.group:
            raise ValueError(
                f"speaker {rec.speaker_id} appears in both groups {prev} and {rec.group}"
            )


def build_plan(manifest, method: str, dys_factors=None,
               ctl_factors: FactorTable | None = None,
               ctl_multiplicity: int = 0) -> list[AugmentJob]:
    """Expand a manifest into augmentation jobs, sorted by output id.

    ``dys_factors`` is an iterable of global factors applied to every DYS
    utterance. When ``ctl_multiplicity`` > 0, every CTL utterance gets that
    many distinct target speakers from ``ctl_factors``. Raises for unknown
    methods, inconsistent speaker groups, DYS speakers missing from a given
    factor table, or duplicate output ids.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    manifest = list(manifest)
    _check_speaker_groups(manifest)

    if ctl_factors is not None:
        known = set(ctl_factors.entries)
        missing = {
            rec.speaker_id
            for rec in manifest
            if rec.group == GROUP_DYSARTHRIC and rec.speaker_id not in known
        }
        if missing:
            raise ValueError(
                f"factor table is missing manifest speakers: {sorted(missing)}"
            )

    jobs = []
    if dys_factors is not None:
        factors = list(dys_factors)
        for rec in manifest:
            if rec.group != GROUP_DYSARTHRIC:
                continue
            for factor in factors:
                jobs.append(
                    AugmentJob(rec, method, float(factor), None,
                               make_output_id(rec.utterance_id, method, factor))
                )

    if ctl_multiplicity > 0:
        if ctl_factors is None:
            raise ValueError("ctl_multiplicity > 0 requires a factor table")
        targets = sorted(ctl_factors.entries)
        if ctl_multiplicity > len(targets):
            raise ValueError(
                f"ctl_multiplicity {ctl_multiplicity} exceeds the "
                f"{len(targets)} available target speakers"
            )
        for rec in manifest:
            if rec.group != GROUP_CONTROL:
                continue
            offset = _stable_offset(rec.utterance_id, len(targets))
            for i in range(ctl_multiplicity):
                target = targets[(offset + i) % len(targets)]
                factor = ctl_factors.entries[target]
                jobs.append(
                    AugmentJob(rec, method, float(factor), target,
                               make_output_id(rec.utterance_id, method, factor, target))
                )

    jobs.sort(key=lambda job: job.output_id)
    ids = [job.output_id for job in jobs]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ValueError(f"duplicate output ids in plan: {dupes[:5]}")
    return jobs


_DEFAULT_METHOD_PARAMS = {
    "vtlp": {"boundary_hz": 4800.0, "frame_len": 512, "hop": 128},
    "tempo": {"frame_len": 512, "tolerance": 128},
    "speed": {"taps_per_side": 32, "kaiser_beta": 12.0, "cutoff_scale": 0.95},
}


def perturb_buffer(buffer, method: str, factor: float, method_params: dict):
    """Apply one perturbation method to a buffer."""
    opts = dict(_DEFAULT_METHOD_PARAMS[method])
    opts.update(method_params.get(method, {}))
    if method == "vtlp":
        spec = WarpSpec(factor, opts["boundary_hz"])
        return vtlp_perturb(buffer, spec, opts["frame_len"], opts["hop"])
    if method == "tempo":
        return tempo_perturb(buffer, factor, WsolaParams(opts["frame_len"], opts["tolerance"]))
    if method == "speed":
        return speed_perturb(
            buffer, factor,
            ResamplerParams(opts["taps_per_side"], opts["kaiser_beta"], opts["cutoff_scale"]),
        )
    raise ValueError(f"unknown method {method!r}")


def _execute_job(job: AugmentJob, output_dir: str, method_params: dict):
    """Run one job; returns (record, None) or (None, (output_id, message))."""
    try:
        buffer = read_wav(job.source.audio_path)
        out = perturb_buffer(buffer, job.method, job.factor, method_params)
        path = str(Path(output_dir) / f"{job.output_id}.wav")
        write_wav(out, path)
        speaker = job.target_speaker or job.source.speaker_id
        group = GROUP_DYSARTHRIC if job.target_speaker else job.source.group
        record = UtteranceRecord(job.output_id, speaker, group, path,
                                 len(out) / out.sample_rate_hz)
        return record, None
    except Exception as exc:  # noqa: BLE001 - the failure report wants everything
        return None, (job.output_id, f"{type(exc).__name__}: {exc}")


def run_plan(plan, output_dir, workers: int = 1,
             method_params: dict | None = None) -> RunResult:
    """Execute a plan, writing one WAV per job under ``output_dir``.

    Jobs are independent; results are identical for any worker count. The
    returned records carry measured output durations, ordered like the plan.
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    method_params = method_params or {}

    if workers <= 1:
        outcomes = [_execute_job(job, str(output_dir), method_params) for job in plan]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(
                pool.map(_execute_job, plan,
                         [str(output_dir)] * len(plan),
                         [method_params] * len(plan))
            )

    records = [rec for rec, _ in outcomes if rec is not None]
    failures = [err for _, err in outcomes if err is not None]
    return RunResult(records, failures)


def method_of_record(record: UtteranceRecord) -> str:
    """Perturbation method encoded in an output id, or 'original'."""
    match = _METHOD_ID_RE.search(record.utterance_id)
    return match.group(1) if match else "original"


def summarize(manifest) -> Summary:
    """Hours of audio in total, per group, and per perturbation method."""
    by_group: dict[str, float] = {}
    by_method: dict[str, float] = {}
    total = 0.0
    for rec in manifest:
        hours = rec.duration / 3600.0
        total += hours
        by_group[rec.group] = by_group.get(rec.group, 0.0) + hours
        method = method_of_record(rec)
        by_method[method] = by_method.get(method, 0.0) + hours
    return Summary(total, by_group, by_method)


def save_manifest(records, path) -> None:
    """One JSON object per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(asdict(rec), sort_keys=True) + "\n")


def load_manifest(path) -> list[UtteranceRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(UtteranceRecord(**json.loads(line)))
    _check_speaker_groups(records)
    return records


def save_plan(plan, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for job in plan:
            entry = {
                "source": asdict(job.source),
                "method": job.method,
                "factor": job.factor,
                "target_speaker": job.target_speaker,
                "output_id": job.output_id,
            }
            fh.write(json.dumps(entry, sort_keys=True) + "\n")


def load_plan(path) -> list[AugmentJob]:
    jobs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            entry = json.loads(line)
            jobs.append(
                AugmentJob(UtteranceRecord(**entry["source"]), entry["method"],
                           entry["factor"], entry["target_speaker"], entry["output_id"])
            )
    return jobs


def parse_config(path) -> dict[str, str]:
    """Parse a ``key = value`` config file; '#' starts a comment."""
    config: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {line_no}: expected 'key = value'")
            key, value = line.split("=", 1)
            config[key.strip()] = value.strip()
    return config
