"""Dataset container (.aadb) and the deterministic synthetic generator.

Container layout (alignment 4 bytes, integers little-endian):

    AADB <version> <manifest_nbytes>\\n      ASCII header line
    <manifest JSON, UTF-8>                   descriptive-text manifest
    <newline padding to a 4-byte boundary>
    <payload>                                float32 LE, channel-major

The manifest lists subjects and trials; each trial records its label,
sample count and byte offset inside the payload, so single trials can be
read without touching the rest of the file.

The synthetic generator plants a 10 Hz alpha-band tone whose amplitude is
(1 + asymmetry) on the hemisphere matching the attended side and 1 on the
other, over white Gaussian noise, which is exactly the kind of lateralized
alpha-power signature the detector is built to pick up.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError
from .features import EegRecording, Label

FORMAT_VERSION = 1
_MAGIC = "AADB"
ALPHA_TONE_HZ = 10.0

# BioSemi 64-channel layout in the international 10/20 naming. Odd final
# digit = left hemisphere, even = right, trailing z = midline (midline
# electrodes belong to neither side and never get the asymmetry boost).
BIOSEMI64_CHANNELS = [
    "Fp1", "AF7", "AF3", "F1", "F3", "F5", "F7", "FT7", "FC5", "FC3", "FC1",
    "C1", "C3", "C5", "T7", "TP7", "CP5", "CP3", "CP1", "P1", "P3", "P5",
    "P7", "P9", "PO7", "PO3", "O1", "Iz", "Oz", "POz", "Pz", "CPz", "Fpz",
    "Fp2", "AF8", "AF4", "AFz", "Fz", "F2", "F4", "F6", "F8", "FT8", "FC6",
    "FC4", "FC2", "FCz", "Cz", "C2", "C4", "C6", "T8", "TP8", "CP6", "CP4",
    "CP2", "P2", "P4", "P6", "P8", "P10", "PO8", "PO4", "O2",
]


def _electrode_side(name: str) -> str:
    if name[-1] in "zZ":
        return "midline"
    return "left" if int(name[-1]) % 2 == 1 else "right"


def hemisphere_map(n_channels: int) -> list[str]:
    """Per-channel side tags. 64 channels use the BioSemi table; any
    other count splits positionally (first half left, last half right,
    odd middle channel midline)."""
    if n_channels == 64:
        return [_electrode_side(name) for name in BIOSEMI64_CHANNELS]
    half = n_channels // 2
    sides = ["left"] * half
    if n_channels % 2 == 1:
        sides.append("midline")
    sides += ["right"] * half
    return sides


@dataclass
class TrialEntry:
    trial_id: str
    label: Label
    n_samples: int
    offset: int | None = None  # bytes from payload start, writer-assigned
    nbytes: int | None = None


@dataclass
class SubjectEntry:
    subject_id: str
    trials: list[TrialEntry] = field(default_factory=list)


@dataclass
class DatasetManifest:
    dataset_name: str
    sample_rate: float
    n_channels: int
    subjects: list[SubjectEntry] = field(default_factory=list)
    format_version: int = FORMAT_VERSION

    def trial_count(self) -> int:
        return sum(len(s.trials) for s in self.subjects)


def build_manifest(recordings, dataset_name: str) -> DatasetManifest:
    """Group recordings by subject (order preserved) into a manifest."""
    recordings = list(recordings)
    if recordings:
        rate = recordings[0].sample_rate
        channels = recordings[0].n_channels
    else:
        rate, channels = 0.0, 0
    manifest = DatasetManifest(dataset_name, rate, channels)
    by_subject: dict[str, SubjectEntry] = {}
    for rec in recordings:
        if rec.sample_rate != rate or rec.n_channels != channels:
            raise DataFormatError(
                f"trial {rec.subject_id}/{rec.trial_id} disagrees on rate/channels")
        entry = by_subject.get(rec.subject_id)
        if entry is None:
            entry = SubjectEntry(rec.subject_id)
            by_subject[rec.subject_id] = entry
            manifest.subjects.append(entry)
        entry.trials.append(TrialEntry(rec.trial_id, rec.label, rec.n_samples))
    return manifest


def _manifest_to_json(manifest: DatasetManifest) -> dict:
    return {
        "format_version": manifest.format_version,
        "dataset_name": manifest.dataset_name,
        "sample_rate": manifest.sample_rate,
        "n_channels": manifest.n_channels,
        "subjects": [
            {
                "subject_id": s.subject_id,
                "trials": [
                    {
                        "trial_id": t.trial_id,
                        "label": t.label.name.lower(),
                        "n_samples": t.n_samples,
                        "offset": t.offset,
                        "nbytes": t.nbytes,
                    }
                    for t in s.trials
                ],
            }
            for s in manifest.subjects
        ],
    }


def _manifest_from_json(doc: dict) -> DatasetManifest:
    try:
        manifest = DatasetManifest(
            dataset_name=doc["dataset_name"],
            sample_rate=doc["sample_rate"],
            n_channels=doc["n_channels"],
            format_version=doc["format_version"],
        )
        for s in doc["subjects"]:
            entry = SubjectEntry(s["subject_id"])
            for t in s["trials"]:
                label = {"left": Label.LEFT, "right": Label.RIGHT}.get(t["label"])
                if label is None:
                    raise DataFormatError(f"unknown label {t['label']!r}")
                entry.trials.append(TrialEntry(
                    t["trial_id"], label, t["n_samples"], t["offset"], t["nbytes"]))
            manifest.subjects.append(entry)
    except KeyError as exc:
        raise DataFormatError(f"manifest missing field {exc}") from exc
    return manifest


def write_dataset(manifest: DatasetManifest, recordings, path) -> None:
    """Serialize manifest + payload. Refuses on any mismatch between the
    manifest and the actual recordings; byte-identical for identical
    inputs."""
    recordings = list(recordings)
    entries = [(s.subject_id, t) for s in manifest.subjects for t in s.trials]
    if len(entries) != len(recordings):
        raise DataFormatError(
            f"manifest lists {len(entries)} trials but {len(recordings)} recordings given")
    offset = 0
    payload = io.BytesIO()
    for (subject_id, entry), rec in zip(entries, recordings):
        if rec.subject_id != subject_id or rec.trial_id != entry.trial_id:
            raise DataFormatError(
                f"manifest order mismatch at {subject_id}/{entry.trial_id}")
        if rec.n_samples != entry.n_samples or rec.label != entry.label:
            raise DataFormatError(
                f"trial {subject_id}/{entry.trial_id} disagrees with manifest")
        if rec.n_channels != manifest.n_channels or rec.sample_rate != manifest.sample_rate:
            raise DataFormatError(
                f"trial {subject_id}/{entry.trial_id} disagrees on rate/channels")
        blob = rec.samples.astype("<f4").tobytes()
        entry.offset = offset
        entry.nbytes = len(blob)
        payload.write(blob)
        offset += len(blob)
    body = json.dumps(_manifest_to_json(manifest)).encode("utf-8")
    header = f"{_MAGIC} {manifest.format_version} {len(body)}\n".encode("ascii")
    pad = b"\n" * (-(len(header) + len(body)) % 4)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)
        fh.write(pad)
        fh.write(payload.getvalue())


class DatasetReader:
    """Lazy per-trial access to an .aadb file."""

    def __init__(self, path, manifest: DatasetManifest, payload_start: int,
                 payload_size: int):
        self.path = path
        self.manifest = manifest
        self._payload_start = payload_start
        self._payload_size = payload_size
        self._index = {
            (s.subject_id, t.trial_id): t
            for s in manifest.subjects for t in s.trials
        }

    def subject_ids(self) -> list[str]:
        return [s.subject_id for s in self.manifest.subjects]

    def read(self, subject_id: str, trial_id: str) -> EegRecording:
        entry = self._index.get((subject_id, trial_id))
        if entry is None:
            raise DataFormatError(f"no trial {subject_id}/{trial_id} in manifest")
        expected = entry.n_samples * self.manifest.n_channels * 4
        if entry.offset is None or entry.nbytes != expected:
            raise DataFormatError(
                f"trial {subject_id}/{trial_id}: manifest offset/size inconsistent")
        if entry.offset + entry.nbytes > self._payload_size:
            raise DataFormatError(
                f"trial {subject_id}/{trial_id}: payload truncated")
        with open(self.path, "rb") as fh:
            fh.seek(self._payload_start + entry.offset)
            blob = fh.read(entry.nbytes)
        if len(blob) != entry.nbytes:
            raise DataFormatError(f"trial {subject_id}/{trial_id}: payload truncated")
        samples = np.frombuffer(blob, dtype="<f4").reshape(
            self.manifest.n_channels, entry.n_samples)
        return EegRecording(
            samples.astype(np.float64), self.manifest.sample_rate,
            entry.label, subject_id, trial_id)

    def iter_recordings(self, subject_id: str | None = None):
        for s in self.manifest.subjects:
            if subject_id is not None and s.subject_id != subject_id:
                continue
            for t in s.trials:
                yield self.read(s.subject_id, t.trial_id)


def read_dataset(path) -> tuple[DatasetManifest, DatasetReader]:
    with open(path, "rb") as fh:
        header = fh.readline()
        parts = header.decode("ascii", errors="replace").split()
        if len(parts) != 3 or parts[0] != _MAGIC:
            raise DataFormatError(f"{path}: not an .aadb file (bad magic)")
        version, manifest_nbytes = int(parts[1]), int(parts[2])
        if version != FORMAT_VERSION:
            raise DataFormatError(
                f"{path}: unsupported format version {version} (expected {FORMAT_VERSION})")
        body = fh.read(manifest_nbytes)
        if len(body) != manifest_nbytes:
            raise DataFormatError(f"{path}: manifest truncated")
        payload_start = len(header) + manifest_nbytes
        payload_start += -payload_start % 4
        fh.seek(0, 2)
        payload_size = fh.tell() - payload_start
    try:
        doc = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"{path}: manifest is not valid JSON: {exc}") from exc
    manifest = _manifest_from_json(doc)
    reader = DatasetReader(path, manifest, payload_start, max(payload_size, 0))
    _validate_offsets(manifest, reader._payload_size)
    return manifest, reader


def _validate_offsets(manifest: DatasetManifest, payload_size: int) -> None:
    spans = []
    for s in manifest.subjects:
        for t in s.trials:
            if t.offset is None or t.nbytes is None:
                raise DataFormatError(
                    f"trial {s.subject_id}/{t.trial_id}: missing offset")
            if t.offset < 0 or t.offset + t.nbytes > payload_size:
                raise DataFormatError(
                    f"trial {s.subject_id}/{t.trial_id}: payload truncated "
                    f"(needs bytes up to {t.offset + t.nbytes}, payload has {payload_size})")
            spans.append((t.offset, t.offset + t.nbytes, s.subject_id, t.trial_id))
    spans.sort()
    for (a_start, a_end, *a_id), (b_start, _, *b_id) in zip(spans, spans[1:]):
        if b_start < a_end:
            raise DataFormatError(
                f"trials {'/'.join(a_id)} and {'/'.join(b_id)} overlap in the payload")


def verify_dataset(path, expect_channels: int | None = None,
                   expect_rate: float | None = None,
                   check_samples: bool = True) -> list[str]:
    """Container validation; returns a list of violations (empty = clean)."""
    violations: list[str] = []
    try:
        manifest, reader = read_dataset(path)
    except DataFormatError as exc:
        return [str(exc)]
    if expect_channels is not None and manifest.n_channels != expect_channels:
        violations.append(
            f"expected {expect_channels} channels, manifest says {manifest.n_channels}")
    if expect_rate is not None and manifest.sample_rate != expect_rate:
        violations.append(
            f"expected {expect_rate} Hz, manifest says {manifest.sample_rate}")
    if check_samples:
        for s in manifest.subjects:
            for t in s.trials:
                try:
                    rec = reader.read(s.subject_id, t.trial_id)
                except DataFormatError as exc:
                    violations.append(str(exc))
                    continue
                if not np.isfinite(rec.samples).all():
                    violations.append(
                        f"trial {s.subject_id}/{t.trial_id}: non-finite samples")
    return violations


@dataclass
class SynthSpec:
    n_subjects: int = 4
    trials_per_subject: int = 8
    trial_seconds: float = 60.0
    n_channels: int = 64
    sample_rate: float = 128.0
    alpha_asymmetry: float = 1.0  # >= 0; 0 means no class signal at all
    noise_sigma: float = 1.0
    seed: int = 1111

    def __post_init__(self):
        if self.alpha_asymmetry < 0:
            raise DataFormatError("alpha_asymmetry must be >= 0")
        if self.n_subjects < 1 or self.trials_per_subject < 1:
            raise DataFormatError("need at least one subject and one trial")


def synthesize(spec: SynthSpec) -> list[EegRecording]:
    """Deterministic synthetic dataset with a lateralized 10 Hz tone.

    Per trial, every channel carries white Gaussian noise; channels on the
    hemisphere matching the trial label additionally get the tone at
    amplitude (1 + alpha_asymmetry) versus 1 on the opposite side and 1 on
    the midline. Labels alternate left/right so each subject is balanced
    to within one trial.
    """
    rng = np.random.default_rng(spec.seed)
    sides = hemisphere_map(spec.n_channels)
    n_samples = round(spec.trial_seconds * spec.sample_rate)
    t = np.arange(n_samples) / spec.sample_rate
    recordings = []
    for s in range(spec.n_subjects):
        subject_id = f"synth{s + 1:02d}"
        for k in range(spec.trials_per_subject):
            label = Label.LEFT if k % 2 == 0 else Label.RIGHT
            boosted = "left" if label == Label.LEFT else "right"
            amp = np.array([
                1.0 + spec.alpha_asymmetry if side == boosted else 1.0
                for side in sides
            ])
            phase = rng.uniform(0.0, 2.0 * math.pi, spec.n_channels)
            tone = amp[:, None] * np.sin(
                2.0 * math.pi * ALPHA_TONE_HZ * t[None, :] + phase[:, None])
            noise = spec.noise_sigma * rng.standard_normal((spec.n_channels, n_samples))
            recordings.append(EegRecording(
                tone + noise, spec.sample_rate, label, subject_id, f"trial{k + 1:02d}"))
    return recordings


def write_synthetic(spec: SynthSpec, path) -> DatasetManifest:
    recordings = synthesize(spec)
    manifest = build_manifest(recordings, "synthetic")
    write_dataset(manifest, recordings, path)
    return manifest
