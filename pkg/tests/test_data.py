"""Container round trips, corruption handling, and the synthetic generator."""

import numpy as np
import pytest

from dgsd.data import (BIOSEMI64_CHANNELS, SynthSpec, build_manifest,
                       hemisphere_map, read_dataset, synthesize,
                       verify_dataset, write_dataset, write_synthetic)
from dgsd.errors import DataFormatError
from dgsd.features import (Band, EegRecording, Label, differential_entropy,
                           bandpass, slide_windows)


def sample_recordings(seed=0, n_channels=3, n_samples=40):
    rng = np.random.default_rng(seed)
    recs = []
    for subject in ("s1", "s2"):
        for trial in ("t1", "t2"):
            # float32-representable values so the round trip is bit-exact
            samples = rng.standard_normal((n_channels, n_samples)).astype(np.float32)
            label = Label.LEFT if trial == "t1" else Label.RIGHT
            recs.append(EegRecording(samples.astype(np.float64), 128.0, label,
                                     subject, trial))
    return recs


def write_sample(tmp_path, name="data.aadb"):
    recs = sample_recordings()
    manifest = build_manifest(recs, "unit")
    path = tmp_path / name
    write_dataset(manifest, recs, path)
    return path, recs


# -- round trips -----------------------------------------------------------------

def test_round_trip_bit_exact(tmp_path):
    path, recs = write_sample(tmp_path)
    manifest, reader = read_dataset(path)
    assert manifest.dataset_name == "unit"
    assert manifest.sample_rate == 128.0
    assert manifest.n_channels == 3
    assert reader.subject_ids() == ["s1", "s2"]
    for rec in recs:
        loaded = reader.read(rec.subject_id, rec.trial_id)
        np.testing.assert_array_equal(loaded.samples, rec.samples)
        assert loaded.label == rec.label


def test_write_is_byte_deterministic(tmp_path):
    p1, _ = write_sample(tmp_path, "a.aadb")
    p2, _ = write_sample(tmp_path, "b.aadb")
    assert p1.read_bytes() == p2.read_bytes()


def test_empty_dataset(tmp_path):
    path = tmp_path / "empty.aadb"
    write_dataset(build_manifest([], "void"), [], path)
    manifest, reader = read_dataset(path)
    assert manifest.subjects == []
    assert verify_dataset(path) == []


def test_manifest_mismatch_refused(tmp_path):
    recs = sample_recordings()
    manifest = build_manifest(recs, "unit")
    manifest.subjects[0].trials[0].n_samples += 1
    with pytest.raises(DataFormatError):
        write_dataset(manifest, recs, tmp_path / "bad.aadb")


def test_manifest_recording_count_mismatch(tmp_path):
    recs = sample_recordings()
    manifest = build_manifest(recs, "unit")
    with pytest.raises(DataFormatError):
        write_dataset(manifest, recs[:-1], tmp_path / "bad.aadb")


# -- corruption ---------------------------------------------------------------------

def test_truncated_payload_names_trial(tmp_path):
    path, _ = write_sample(tmp_path)
    blob = path.read_bytes()
    path.write_bytes(blob[:-20])
    with pytest.raises(DataFormatError, match="truncated"):
        read_dataset(path)
    violations = verify_dataset(path)
    assert violations and "truncated" in violations[0]


def test_unsupported_version(tmp_path):
    path, _ = write_sample(tmp_path)
    blob = path.read_bytes()
    assert blob.startswith(b"AADB 1 ")
    path.write_bytes(b"AADB 0 " + blob[len(b"AADB 1 "):])
    with pytest.raises(DataFormatError, match="version"):
        read_dataset(path)


def test_bad_magic(tmp_path):
    path = tmp_path / "junk.aadb"
    path.write_bytes(b"JUNKDATA\n123")
    with pytest.raises(DataFormatError, match="magic"):
        read_dataset(path)


def test_unknown_trial(tmp_path):
    path, _ = write_sample(tmp_path)
    _, reader = read_dataset(path)
    with pytest.raises(DataFormatError):
        reader.read("s1", "missing")


def test_overlapping_offsets_detected(tmp_path):
    recs = sample_recordings()
    manifest = build_manifest(recs, "unit")
    path = tmp_path / "overlap.aadb"
    write_dataset(manifest, recs, path)
    # Rewrite with the second trial's offset pointing into the first.
    manifest.subjects[0].trials[1].offset = 4
    import json
    from dgsd.data import _manifest_to_json
    body = json.dumps(_manifest_to_json(manifest)).encode()
    header = f"AADB 1 {len(body)}\n".encode()
    pad = b"\n" * (-(len(header) + len(body)) % 4)
    payload = path.read_bytes().split(b"\n", 1)[1]
    raw = path.read_bytes()
    payload_start = len(raw) - sum(
        t.nbytes for s in manifest.subjects for t in s.trials)
    path.write_bytes(header + body + pad + raw[payload_start:])
    with pytest.raises(DataFormatError, match="overlap"):
        read_dataset(path)


# -- hemisphere map --------------------------------------------------------------------

def test_biosemi_map_counts():
    sides = hemisphere_map(64)
    assert len(BIOSEMI64_CHANNELS) == 64
    assert sides.count("left") == 27
    assert sides.count("right") == 27
    assert sides.count("midline") == 10


def test_positional_map_odd_count():
    sides = hemisphere_map(5)
    assert sides == ["left", "left", "midline", "right", "right"]


# -- synthetic generator ----------------------------------------------------------------

def small_spec(**kw):
    base = dict(n_subjects=2, trials_per_subject=4, trial_seconds=4.0,
                n_channels=8, alpha_asymmetry=1.0, noise_sigma=1.0, seed=7)
    base.update(kw)
    return SynthSpec(**base)


def test_synthesis_deterministic():
    a = synthesize(small_spec())
    b = synthesize(small_spec())
    for ra, rb in zip(a, b):
        np.testing.assert_array_equal(ra.samples, rb.samples)
    c = synthesize(small_spec(seed=8))
    assert any(not np.array_equal(ra.samples, rc.samples) for ra, rc in zip(a, c))


def test_labels_balanced_per_subject():
    recs = synthesize(small_spec(trials_per_subject=5))
    for subject in ("synth01", "synth02"):
        labels = [r.label for r in recs if r.subject_id == subject]
        lefts = sum(1 for l in labels if l == Label.LEFT)
        assert abs(lefts - (len(labels) - lefts)) <= 1


def test_sinusoid_band_power_ratio_four_to_one():
    # Noise off isolates the tone: boosted hemisphere carries amplitude 2
    # versus 1, so alpha-band variance ratio is 4:1.
    recs = synthesize(small_spec(noise_sigma=0.0, trial_seconds=8.0))
    rec = next(r for r in recs if r.label == Label.LEFT)
    windows = slide_windows(rec, 1.0)
    band = Band("alpha", 8.0, 13.0)
    power = np.mean([bandpass(w, band).samples.var(axis=1) for w in windows], axis=0)
    sides = hemisphere_map(rec.n_channels)
    left = power[[i for i, s in enumerate(sides) if s == "left"]].mean()
    right = power[[i for i, s in enumerate(sides) if s == "right"]].mean()
    assert left / right == pytest.approx(4.0, rel=0.01)


def test_zero_asymmetry_removes_class_signal():
    recs = synthesize(small_spec(alpha_asymmetry=0.0, noise_sigma=0.0))
    sides = hemisphere_map(recs[0].n_channels)
    band = Band("alpha", 8.0, 13.0)
    for rec in recs[:2]:
        w = slide_windows(rec, 1.0)[0]
        power = bandpass(w, band).samples.var(axis=1)
        left = power[[i for i, s in enumerate(sides) if s == "left"]].mean()
        right = power[[i for i, s in enumerate(sides) if s == "right"]].mean()
        assert left == pytest.approx(right, rel=0.05)


def test_left_windows_have_higher_left_alpha_de():
    # Averaged over many windows the left-hemisphere alpha DE must exceed
    # the right for LEFT-labeled data at asymmetry 1.
    spec = SynthSpec(n_subjects=1, trials_per_subject=2, trial_seconds=64.0,
                     n_channels=64, alpha_asymmetry=1.0, noise_sigma=1.0, seed=3)
    recs = [r for r in synthesize(spec) if r.label == Label.LEFT]
    windows = [w for r in recs for w in slide_windows(r, 1.0)]
    sides = hemisphere_map(64)
    band = Band("alpha", 8.0, 13.0)
    des = np.mean([differential_entropy(bandpass(w, band)) for w in windows], axis=0)
    left = des[[i for i, s in enumerate(sides) if s == "left"]].mean()
    right = des[[i for i, s in enumerate(sides) if s == "right"]].mean()
    assert left > right + 0.2


def test_write_synthetic_verifies_clean(tmp_path):
    path = tmp_path / "synth.aadb"
    manifest = write_synthetic(small_spec(), path)
    assert manifest.trial_count() == 8
    assert verify_dataset(path, expect_channels=8, expect_rate=128.0) == []
    violations = verify_dataset(path, expect_channels=64)
    assert violations and "64" in violations[0]
