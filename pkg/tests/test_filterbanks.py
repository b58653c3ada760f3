import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sepkit.filterbanks import (
    Filterbank,
    SingularFilterbankError,
    TimeFrequencyRep,
    apply_mask,
    decode,
    encode,
    from_polar,
    hilbert_pair,
    load_filterbank,
    make_analytic_free_filterbank,
    make_free_filterbank,
    make_sinc_filterbank,
    make_stft_filterbank,
    polar,
    pseudo_inverse,
    save_filterbank,
)
from sepkit.filterbanks import _sinc_from_bands
from sepkit.signal import Waveform


def direct_dft(x):
    n = len(x)
    return [sum(x[t] * cmath.exp(-2j * cmath.pi * k * t / n) for t in range(n)) for k in range(n)]


def rel_err(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def noise(rng, n, rate=8000):
    return Waveform(rng.standard_normal(n), rate)


# -- STFT -------------------------------------------------------------------


def test_stft_single_frame_matches_direct_dft():
    fb = make_stft_filterbank(4, 4, "rect")
    rep = encode(fb, Waveform([1.0, 0.0, 0.0, 0.0], 8000))
    assert rep.frames.shape == (3, 1)
    np.testing.assert_allclose(rep.frames[:, 0], direct_dft([1.0, 0.0, 0.0, 0.0])[:3], atol=1e-12)


def test_stft_dc_of_constant_frame():
    fb = make_stft_filterbank(4, 4, "rect")
    rep = encode(fb, Waveform([1.0, 1.0, 1.0, 1.0], 8000))
    assert rep.frames[0, 0] == pytest.approx(4.0 + 0.0j, abs=1e-12)
    np.testing.assert_allclose(rep.frames[1:, 0], 0.0, atol=1e-12)


def test_stft_frames_match_windowed_dft(rng):
    fb = make_stft_filterbank(16, 8, "hann")
    x = rng.standard_normal(40)
    rep = encode(fb, Waveform(x, 8000))
    pad = 16 - 8
    xp = np.concatenate([np.zeros(pad), x, np.zeros(pad)])
    w = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(16) / 16)
    for f in (0, 3, rep.frames.shape[1] - 1):
        seg = xp[f * 8:f * 8 + 16] * w
        np.testing.assert_allclose(rep.frames[:, f], direct_dft(list(seg))[:9], atol=1e-10)


def test_stft_bank_shape():
    fb = make_stft_filterbank(512)
    assert fb.n_filters == 2 * 257 and fb.kernel_size == 512 and fb.stride == 256
    assert fb.paired and fb.n_channels == 257


@pytest.mark.parametrize("kwargs", [dict(hop=0), dict(hop=1024), dict(window="kaiser"), dict(hop=3)])
def test_stft_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        make_stft_filterbank(512, **kwargs)


def test_stft_perfect_reconstruction(rng):
    fb = make_stft_filterbank(512, 256, "sqrt_hann")
    x = noise(rng, 8192)
    y = decode(fb, encode(fb, x))
    assert len(y) == len(x)
    assert rel_err(y.samples, x.samples) < 1e-6


@settings(max_examples=40, deadline=None)
@given(
    n_fft=st.sampled_from([8, 16, 64, 256]),
    ratio=st.sampled_from([1, 2, 4]),
    window=st.sampled_from(["sqrt_hann", "hann"]),
    length=st.integers(1, 3000),
    seed=st.integers(0, 1000),
)
def test_stft_reconstruction_property(n_fft, ratio, window, length, seed):
    hop = n_fft // 2 if ratio == 1 else n_fft // (2 * ratio)
    fb = make_stft_filterbank(n_fft, hop, window)
    x = np.random.default_rng(seed).standard_normal(length)
    y = decode(fb, encode(fb, Waveform(x, 8000)))
    np.testing.assert_allclose(y.samples, x, atol=1e-9)


def test_frame_count_formula(rng):
    fb = make_stft_filterbank(64, 16)
    for n in (1, 63, 64, 65, 1000):
        rep = encode(fb, noise(rng, n))
        pad_left = 64 - 16
        padded = rep.frames.shape[1]
        # frames exactly tile the padded signal
        t_padded = (padded - 1) * 16 + 64
        assert t_padded >= n + 2 * pad_left
        assert (t_padded - 64) // 16 + 1 == padded


def test_parseval_rect_window(rng):
    n_fft = 32
    fb = make_stft_filterbank(n_fft, n_fft, "rect")
    x = rng.standard_normal(32 * 20)
    rep = encode(fb, Waveform(x, 8000))
    weights = np.full(fb.n_channels, 2.0)
    weights[[0, -1]] = 1.0
    frame_energy = np.sum(weights[:, None] * np.abs(rep.frames) ** 2)
    assert frame_energy == pytest.approx(n_fft * np.sum(x * x), rel=1e-6)


# -- linearity / adjointness -------------------------------------------------


def _banks():
    return [
        make_stft_filterbank(64, 32),
        make_free_filterbank(16, 12, 6, seed=3),
        make_analytic_free_filterbank(16, 12, 4, seed=5),
        make_sinc_filterbank(8, 31, 8, 8000),
    ]


@pytest.mark.parametrize("fb", _banks(), ids=lambda fb: fb.kind)
def test_encode_zero_and_linear(fb, rng):
    a, b = rng.standard_normal(300), rng.standard_normal(300)
    assert not np.any(encode(fb, Waveform(np.zeros(300), 8000)).frames)
    lhs = encode(fb, Waveform(a + b, 8000)).frames
    rhs = encode(fb, Waveform(a, 8000)).frames + encode(fb, Waveform(b, 8000)).frames
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


@pytest.mark.parametrize("fb", _banks(), ids=lambda fb: fb.kind)
def test_decode_zero_and_linear(fb, rng):
    rep = encode(fb, Waveform(rng.standard_normal(300), 8000))
    shape = rep.frames.shape
    y1 = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    y2 = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    zero = decode(fb, rep.with_frames(np.zeros(shape, complex)))
    assert not np.any(zero.samples)
    lhs = decode(fb, rep.with_frames(y1 + y2)).samples
    rhs = decode(fb, rep.with_frames(y1)).samples + decode(fb, rep.with_frames(y2)).samples
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


@pytest.mark.parametrize("fb", _banks(), ids=lambda fb: fb.kind)
def test_encode_decode_adjoint(fb, rng):
    x = rng.standard_normal(257)
    rep = encode(fb, Waveform(x, 8000))
    shape = rep.frames.shape
    Y = rng.standard_normal(shape) + (1j * rng.standard_normal(shape) if fb.paired else 0)
    lhs = np.sum(rep.frames.real * Y.real + rep.frames.imag * np.imag(Y))
    rhs = np.dot(x, decode(fb, rep.with_frames(Y), normalize=False).samples)
    assert lhs == pytest.approx(rhs, rel=1e-8)


def test_decode_shape_mismatch(rng):
    fb = make_stft_filterbank(64, 32)
    rep = encode(fb, noise(rng, 200))
    with pytest.raises(ValueError):
        decode(make_stft_filterbank(32, 16), rep)
    with pytest.raises(ValueError):
        decode(fb, rep.with_frames(rep.frames[:-1]))
    with pytest.raises(ValueError):
        decode(fb, rep.with_frames(rep.frames[:, :-1]))


def test_encode_empty():
    with pytest.raises(ValueError):
        encode(make_stft_filterbank(8, 4), Waveform([], 8000))


# -- free / analytic / sinc ------------------------------------------------


def test_free_filterbank_deterministic_unit_norm():
    a = make_free_filterbank(32, 16, 8, seed=7)
    b = make_free_filterbank(32, 16, 8, seed=7)
    np.testing.assert_array_equal(a.filters, b.filters)
    np.testing.assert_allclose(np.linalg.norm(a.filters, axis=1), 1.0, atol=1e-9)
    assert not np.array_equal(a.filters, make_free_filterbank(32, 16, 8, seed=8).filters)


def test_free_filterbank_scalar():
    for seed in range(5):
        fb = make_free_filterbank(1, 1, 1, seed=seed)
        assert abs(fb.filters[0, 0]) == 1.0


def test_filterbank_validation():
    with pytest.raises(ValueError):
        Filterbank(np.ones((2, 4)), 5, "free")
    with pytest.raises(ValueError):
        Filterbank(np.ones((2, 4)), 0, "free")
    with pytest.raises(ValueError):
        Filterbank(np.ones((3, 4)), 2, "stft", paired=True)
    with pytest.raises(ValueError):
        Filterbank(np.ones((2, 4)), 2, "gammatone")


def test_hilbert_of_cosine_is_sine():
    K = 64
    t = np.arange(K)
    for k in (1, 5, 17):
        got = hilbert_pair(np.cos(2 * np.pi * k * t / K))
        assert np.max(np.abs(got - np.sin(2 * np.pi * k * t / K))) < 1e-6


def test_analytic_bank_has_no_negative_frequencies():
    fb = make_analytic_free_filterbank(32, 40, 20, seed=2)
    K = fb.kernel_size
    for k in range(fb.n_channels):
        spectrum = np.fft.fft(fb.filters[2 * k] + 1j * fb.filters[2 * k + 1])
        energy = np.abs(spectrum) ** 2
        assert energy[K // 2 + 1:].sum() < 1e-10 * energy.sum()


def test_analytic_bank_odd_filters_rejected():
    with pytest.raises(ValueError):
        make_analytic_free_filterbank(3, 16, 8)


def test_sinc_peak_inside_band():
    rate, K = 8000, 251
    fb = make_sinc_filterbank(40, K, 64, rate, 50.0, 50.0)
    n_fft = 8192
    freqs = np.fft.rfftfreq(n_fft, 1 / rate)
    tol = rate / K
    assert fb.band_hz.shape == (20, 2)
    for k, (f1, f2) in enumerate(fb.band_hz):
        for row in (fb.filters[2 * k], fb.filters[2 * k + 1]):
            peak = freqs[np.argmax(np.abs(np.fft.rfft(row, n_fft)))]
            assert f1 - tol <= peak <= f2 + tol, (k, f1, f2, peak)


def test_sinc_mel_spacing_and_determinism():
    a = make_sinc_filterbank(16, 101, 50, 16000, 30.0, 50.0)
    b = make_sinc_filterbank(16, 101, 50, 16000, 30.0, 50.0)
    np.testing.assert_array_equal(a.filters, b.filters)
    mel = 2595 * np.log10(1 + a.band_hz[:, 0] / 700)
    np.testing.assert_allclose(np.diff(mel), np.diff(mel)[0], rtol=1e-9)
    assert a.band_hz[0, 0] == pytest.approx(30.0)


def test_sinc_errors():
    with pytest.raises(ValueError):
        make_sinc_filterbank(8, 100, 10, 8000)  # even kernel
    with pytest.raises(ValueError):
        make_sinc_filterbank(7, 101, 10, 8000)
    with pytest.raises(ValueError):
        make_sinc_filterbank(8, 101, 10, 8000, min_low_hz=3990.0, min_band_hz=50.0)
    with pytest.raises(ValueError, match="degenerate"):
        _sinc_from_bands([[100.0, 400.0], [500.0, 500.0]], 101, 10, 8000)


# -- pseudo-inverse --------------------------------------------------------


def test_pinv_of_stft_reconstructs(rng):
    fb = make_stft_filterbank(256, 128)
    x = noise(rng, 4096)
    y = decode(pseudo_inverse(fb), encode(fb, x))
    assert rel_err(y.samples, x.samples) < 1e-6


def test_pinv_of_oversampled_free_bank(rng):
    K = 32
    fb = make_free_filterbank(2 * K, K, K // 2, seed=11)
    x = noise(rng, 4000)
    y = decode(pseudo_inverse(fb), encode(fb, x))
    assert rel_err(y.samples, x.samples) < 1e-4


def test_pinv_of_analytic_bank(rng):
    fb = make_analytic_free_filterbank(64, 32, 8, seed=1)
    x = noise(rng, 2000)
    y = decode(pseudo_inverse(fb), encode(fb, x))
    assert rel_err(y.samples, x.samples) < 1e-4


def test_pinv_identity():
    fb = Filterbank(np.ones((1, 1)), 1, "free")
    np.testing.assert_allclose(pseudo_inverse(fb).filters, [[1.0]], atol=1e-7)
    x = Waveform([0.5, -1.0, 2.0], 8000)
    np.testing.assert_allclose(decode(pseudo_inverse(fb), encode(fb, x)).samples, x.samples, atol=1e-7)


def test_pinv_singular_without_regularization():
    fb = make_free_filterbank(4, 16, 8, seed=0)  # rank 4 < 16
    with pytest.raises(SingularFilterbankError):
        pseudo_inverse(fb, regularization=0.0)
    pseudo_inverse(fb)  # fine with the default


# -- polar / masks -----------------------------------------------------------


def _rep(frames):
    return TimeFrequencyRep(np.asarray(frames, complex), 4, 8, 8000, 16)


def test_polar_values():
    mag, phase = polar(_rep([[3 + 4j, 0j, -1 + 0j]]))
    np.testing.assert_allclose(mag, [[5.0, 0.0, 1.0]])
    assert phase[0, 0] == pytest.approx(np.arctan2(4, 3))
    assert phase[0, 1] == 0.0
    assert phase[0, 2] == pytest.approx(np.pi)


def test_polar_reconstructs(rng):
    frames = rng.standard_normal((5, 7)) + 1j * rng.standard_normal((5, 7))
    mag, phase = polar(_rep(frames))
    assert np.all(phase > -np.pi) and np.all(phase <= np.pi)
    np.testing.assert_allclose(from_polar(mag, phase), frames, atol=1e-12)


def test_apply_mask(rng):
    frames = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    rep = _rep(frames)
    assert np.array_equal(apply_mask(rep, np.ones((3, 4)), "magnitude").frames, frames)
    assert not np.any(apply_mask(rep, np.zeros((3, 4))).frames)
    one = _rep([[1 + 0j]])
    assert apply_mask(one, np.array([[1j]]), "complex").frames[0, 0] == 1j
    m = rng.uniform(0, 2, (3, 4))
    out = apply_mask(rep, m).frames
    np.testing.assert_allclose(np.abs(out), m * np.abs(frames))
    np.testing.assert_allclose(np.angle(out), np.angle(frames))


def test_apply_mask_errors():
    rep = _rep(np.ones((2, 2)))
    with pytest.raises(ValueError):
        apply_mask(rep, np.ones((2, 3)))
    with pytest.raises(ValueError):
        apply_mask(rep, -np.ones((2, 2)))
    with pytest.raises(ValueError):
        apply_mask(rep, np.ones((2, 2)), "phase")


# -- export ------------------------------------------------------------------


@pytest.mark.parametrize("fb", _banks(), ids=lambda fb: fb.kind)
def test_save_load_roundtrip(tmp_path, fb, rng):
    path = tmp_path / "fb.txt"
    save_filterbank(fb, path)
    back = load_filterbank(path)
    np.testing.assert_array_equal(back.filters, fb.filters)
    assert (back.stride, back.kind, back.paired) == (fb.stride, fb.kind, fb.paired)
    x = noise(rng, 500)
    np.testing.assert_array_equal(encode(back, x).frames, encode(fb, x).frames)
    if fb.kind == "stft":
        np.testing.assert_allclose(decode(back, encode(back, x)).samples, x.samples, atol=1e-10)
