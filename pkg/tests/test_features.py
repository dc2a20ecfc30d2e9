"""Windowing, band decomposition and differential-entropy features."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dgsd.errors import BandError, WindowError
from dgsd.features import (DEFAULT_BANDS, VARIANCE_FLOOR, Band, EegRecording,
                           EegWindow, Label, bandpass, differential_entropy,
                           extract_features, slide_windows, znorm_trial)


def make_recording(samples, rate=128.0, label=Label.LEFT):
    return EegRecording(np.asarray(samples, dtype=float), rate, label, "s1", "t1")


def random_window(n_channels=4, n_samples=128, rate=128.0, seed=0):
    rng = np.random.default_rng(seed)
    return EegWindow(rng.standard_normal((n_channels, n_samples)), rate, Label.LEFT)


# -- sliding windows ----------------------------------------------------------

def test_exact_division_one_second():
    rec = make_recording(np.zeros((2, 1280)))
    windows = slide_windows(rec, 1.0, 1.0)
    assert len(windows) == 10
    assert all(w.samples.shape == (2, 128) for w in windows)
    assert [w.origin[2] for w in windows] == [128 * i for i in range(10)]
    assert all(w.label == Label.LEFT for w in windows)


def test_exact_division_five_seconds():
    rec = make_recording(np.zeros((2, 1280)))
    windows = slide_windows(rec, 5.0, 5.0)
    assert len(windows) == 2
    assert all(w.samples.shape == (2, 640) for w in windows)


def test_too_short_recording():
    rec = make_recording(np.zeros((2, 100)))
    with pytest.raises(WindowError):
        slide_windows(rec, 1.0)


def test_default_hop_is_window_length():
    rec = make_recording(np.zeros((1, 1280)))
    assert len(slide_windows(rec, 2.0)) == 5


def test_windows_copy_not_view():
    rec = make_recording(np.arange(256, dtype=float).reshape(1, 256))
    w = slide_windows(rec, 1.0)[0]
    w.samples[0, 0] = -1
    assert rec.samples[0, 0] == 0.0


@settings(max_examples=200, deadline=None)
@given(total=st.integers(1, 400), length=st.integers(1, 400), hop=st.integers(1, 40))
def test_window_count_formula(total, length, hop):
    # 1 Hz sampling makes seconds equal samples exactly.
    if length > total:
        return
    rec = make_recording(np.zeros((1, total)), rate=1.0)
    windows = slide_windows(rec, float(length), float(hop))
    assert len(windows) == (total - length) // hop + 1
    last = windows[-1]
    assert last.origin[2] + length <= total


# -- band-pass ---------------------------------------------------------------

def test_band_validation():
    with pytest.raises(BandError):
        Band("bad", 5.0, 5.0)
    with pytest.raises(BandError):
        Band("bad", 0.0, 5.0)
    window = random_window()
    with pytest.raises(BandError):
        bandpass(window, Band("toohigh", 30.0, 70.0))  # Nyquist is 64


def test_alpha_tone_preserved_gamma_removes():
    t = np.arange(128) / 128.0
    tone = np.sin(2 * np.pi * 10.0 * t)[None, :]
    window = EegWindow(tone, 128.0, Label.LEFT)
    in_var = tone.var()
    alpha = bandpass(window, Band("alpha", 8.0, 13.0))
    assert abs(alpha.samples.var() - in_var) / in_var < 0.05
    gamma = bandpass(window, Band("gamma", 31.0, 50.0))
    assert gamma.samples.var() < 1e-6 * in_var


def test_zero_signal_stays_zero():
    window = EegWindow(np.zeros((3, 64)), 128.0, Label.RIGHT)
    out = bandpass(window, DEFAULT_BANDS[2])
    np.testing.assert_array_equal(out.samples, 0.0)


def fft_mask_oracle(x, rate, lo, hi):
    """Independent two-sided-FFT masking, kept separate from the
    rfft-based implementation."""
    spec = np.fft.fft(x, axis=1)
    freqs = np.abs(np.fft.fftfreq(x.shape[1], d=1.0 / rate))
    spec[:, (freqs < lo) | (freqs > hi)] = 0.0
    return np.fft.ifft(spec, axis=1).real


@pytest.mark.parametrize("band", DEFAULT_BANDS, ids=lambda b: b.name)
def test_bandpass_matches_full_fft_oracle(band):
    window = random_window(n_channels=3, n_samples=128, seed=11)
    out = bandpass(window, band)
    expected = fft_mask_oracle(window.samples, 128.0, band.lo, band.hi)
    np.testing.assert_allclose(out.samples, expected, atol=1e-10)


def test_bandpass_is_linear():
    wa = random_window(seed=1)
    wb = random_window(seed=2)
    mix = EegWindow(2.5 * wa.samples - 0.5 * wb.samples, 128.0, Label.LEFT)
    band = DEFAULT_BANDS[3]
    lhs = bandpass(mix, band).samples
    rhs = 2.5 * bandpass(wa, band).samples - 0.5 * bandpass(wb, band).samples
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-12)


def test_disjoint_band_variances_bounded_by_total():
    window = random_window(n_channels=2, n_samples=256, seed=5)
    total = window.samples.var(axis=1)
    band_sum = sum(bandpass(window, b).samples.var(axis=1) for b in DEFAULT_BANDS)
    assert (band_sum <= total * (1 + 1e-6)).all()


# -- differential entropy ------------------------------------------------------

def test_de_closed_forms():
    scale = math.sqrt(1.0 / (2 * math.pi * math.e))
    base = np.array([1.0, -1.0] * 32)  # variance exactly 1
    w_unit = EegWindow(base[None, :], 128.0, Label.LEFT)
    assert differential_entropy(w_unit)[0] == pytest.approx(0.5 * math.log(2 * math.pi * math.e))
    w_scaled = EegWindow(scale * base[None, :], 128.0, Label.LEFT)
    assert differential_entropy(w_scaled)[0] == pytest.approx(0.0, abs=1e-12)


def test_de_monotone_in_variance():
    base = np.array([1.0, -1.0] * 32)
    des = [differential_entropy(EegWindow(s * base[None, :], 128.0, Label.LEFT))[0]
           for s in (0.5, 1.0, 2.0, 4.0)]
    assert des == sorted(des)


def test_de_monte_carlo_gaussian():
    rng = np.random.default_rng(7)
    values = []
    for _ in range(200):
        w = EegWindow(rng.normal(0.0, 2.0, (1, 640)), 128.0, Label.LEFT)
        values.append(differential_entropy(w)[0])
    target = 0.5 * math.log(2 * math.pi * math.e * 4.0)
    assert abs(np.mean(values) - target) < 0.05


def test_de_shift_invariant():
    w = random_window(seed=9)
    shifted = EegWindow(w.samples + 123.456, 128.0, w.label)
    np.testing.assert_allclose(differential_entropy(shifted),
                               differential_entropy(w), atol=1e-9)


def test_de_zero_variance_clamped():
    w = EegWindow(np.full((3, 64), 2.5), 128.0, Label.LEFT)
    de = differential_entropy(w)
    floor = 0.5 * math.log(2 * math.pi * math.e * VARIANCE_FLOOR)
    np.testing.assert_allclose(de, floor)
    assert np.isfinite(de).all()


def test_de_needs_two_samples():
    with pytest.raises(WindowError):
        differential_entropy(EegWindow(np.ones((1, 1)), 128.0, Label.LEFT))


# -- feature extraction ---------------------------------------------------------

def test_feature_matrix_shape_64x5():
    w = random_window(n_channels=64, n_samples=128, seed=3)
    feats = extract_features(w)
    assert feats.values.shape == (64, 5)
    assert feats.values.size == 320
    assert np.isfinite(feats.values).all()
    assert feats.label == w.label


def test_feature_matrix_small():
    w = random_window(n_channels=2, n_samples=64, seed=4)
    feats = extract_features(w, bands=[Band("alpha", 8.0, 13.0)])
    assert feats.values.shape == (2, 1)


def test_features_match_composition():
    w = random_window(n_channels=3, n_samples=128, seed=6)
    feats = extract_features(w)
    for b, band in enumerate(DEFAULT_BANDS):
        expected = differential_entropy(bandpass(w, band))
        np.testing.assert_allclose(feats.values[:, b], expected)


def test_features_deterministic():
    w = random_window(seed=8)
    a = extract_features(w).values
    b = extract_features(w).values
    np.testing.assert_array_equal(a, b)


def test_features_zero_input_hits_floor():
    w = EegWindow(np.zeros((2, 128)), 128.0, Label.RIGHT)
    feats = extract_features(w)
    floor = 0.5 * math.log(2 * math.pi * math.e * VARIANCE_FLOOR)
    np.testing.assert_allclose(feats.values, floor)


def test_features_reject_empty_bands():
    with pytest.raises(BandError):
        extract_features(random_window(), bands=[])


# -- z-normalization -------------------------------------------------------------

def test_znorm_basic():
    rec = make_recording([[1.0, 2.0, 3.0]])
    out = znorm_trial(rec)
    assert abs(out.samples.mean()) < 1e-9
    assert abs(out.samples.var() - 1.0) < 1e-6


def test_znorm_idempotent():
    rng = np.random.default_rng(2)
    rec = make_recording(rng.standard_normal((3, 500)))
    once = znorm_trial(rec)
    twice = znorm_trial(once)
    np.testing.assert_allclose(twice.samples, once.samples, atol=1e-9)


def test_znorm_constant_channel():
    rec = make_recording([[5.0, 5.0, 5.0], [1.0, 2.0, 3.0]])
    out = znorm_trial(rec)
    np.testing.assert_array_equal(out.samples[0], 0.0)
    assert abs(out.samples[1].var() - 1.0) < 1e-6


def test_recording_validation():
    with pytest.raises(WindowError):
        EegRecording(np.zeros((2, 5)), 0.0, Label.LEFT)
    with pytest.raises(Exception):
        EegRecording(np.array([[np.nan, 1.0]]), 128.0, Label.LEFT)
