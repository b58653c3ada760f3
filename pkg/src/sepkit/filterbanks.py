"""Analysis/synthesis filterbanks and the convolutional encoder/decoder.

A :class:`Filterbank` holds a real ``(n_filters, kernel_size)`` matrix and a
stride. Paired banks (``stft``, ``analytic_free``, ``sinc``) store complex
channel ``k`` as rows ``2k`` (real part) and ``2k + 1`` (imaginary part).

Encoding is a strided correlation of the zero-padded signal with every filter;
decoding is the transposed operation (overlap-add of filter-weighted frames)
followed by trimming of the padding. For ``stft`` banks the decoder applies
the inverse-DFT bin weights and divides by the squared-window envelope, which
makes ``decode(fb, encode(fb, x))`` reproduce ``x``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, replace

import numpy as np

from . import _backend
from .signal import Waveform

KINDS = ("stft", "free", "analytic_free", "sinc")
PAIRED_KINDS = ("stft", "analytic_free", "sinc")
WINDOWS = ("sqrt_hann", "hann", "rect")

_ENVELOPE_FLOOR = 1e-10


class SingularFilterbankError(np.linalg.LinAlgError):
    pass


def _readonly(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Filterbank:
    """Bank of FIR filters plus stride.

    ``window`` is kept for STFT banks. ``envelope`` marks a synthesis bank: its
    shifted sum is the overlap-add gain that ``decode`` divides out. ``band_hz``
    holds the ``(f_low, f_high)`` pair of every sinc band.
    """

    filters: np.ndarray
    stride: int
    kind: str
    paired: bool = False
    window: np.ndarray | None = None
    envelope: np.ndarray | None = None
    band_hz: np.ndarray | None = None
    sample_rate_hz: int | None = None

    def __post_init__(self):
        filters = np.atleast_2d(np.asarray(self.filters, dtype=np.float64))
        if filters.ndim != 2 or filters.size == 0:
            raise ValueError("filters must be a non-empty 2-D matrix")
        n_filters, kernel = filters.shape
        stride = int(self.stride)
        if not 1 <= stride <= kernel:
            raise ValueError(f"stride must be in [1, kernel_size={kernel}], got {self.stride}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown filterbank kind {self.kind!r}; expected one of {KINDS}")
        if self.paired and n_filters % 2:
            raise ValueError("paired filterbanks need an even number of filters")
        if not np.all(np.isfinite(filters)):
            raise ValueError("filter coefficients must be finite")
        object.__setattr__(self, "filters", _readonly(filters))
        object.__setattr__(self, "stride", stride)
        for name in ("window", "envelope", "band_hz"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, _readonly(val))

    @property
    def n_filters(self) -> int:
        return self.filters.shape[0]

    @property
    def kernel_size(self) -> int:
        return self.filters.shape[1]

    @property
    def n_channels(self) -> int:
        return self.n_filters // 2 if self.paired else self.n_filters

    @property
    def is_synthesis(self) -> bool:
        return self.envelope is not None


@dataclass(frozen=True, eq=False)
class TimeFrequencyRep:
    """Complex frames ``(n_channels, n_frames)`` with framing metadata.

    ``n_samples`` is the length of the signal before padding; ``decode`` trims
    its output back to it.
    """

    frames: np.ndarray
    stride: int
    kernel_size: int
    sample_rate_hz: int
    n_samples: int

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.complex128)
        if frames.ndim != 2:
            raise ValueError("frames must be (n_channels, n_frames)")
        if not np.all(np.isfinite(frames)):
            raise ValueError("representation entries must be finite")
        object.__setattr__(self, "frames", frames)

    @property
    def shape(self):
        return self.frames.shape

    def with_frames(self, frames) -> "TimeFrequencyRep":
        return replace(self, frames=frames)


# -- construction -----------------------------------------------------------


def make_window(name: str, n: int) -> np.ndarray:
    """Periodic analysis window of length ``n``."""
    if name not in WINDOWS:
        raise ValueError(f"unknown window {name!r}; expected one of {WINDOWS}")
    if name == "rect":
        return np.ones(n)
    hann = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    if name == "hann":
        return hann
    return np.sqrt(hann)


def make_stft_filterbank(n_fft: int = 512, hop: int | None = None, window: str = "sqrt_hann") -> Filterbank:
    """DFT filterbank: encoding a frame gives its windowed, unnormalized DFT."""
    if window not in WINDOWS:
        raise ValueError(f"unknown window {window!r}; expected one of {WINDOWS}")
    n_fft = int(n_fft)
    if n_fft < 4 or n_fft % 2:
        raise ValueError(f"n_fft must be an even integer >= 4, got {n_fft}")
    hop = n_fft // 2 if hop is None else int(hop)
    if hop <= 0:
        raise ValueError(f"hop must be positive, got {hop}")
    if hop > n_fft:
        raise ValueError(f"hop ({hop}) cannot exceed n_fft ({n_fft})")
    if n_fft % hop:
        raise ValueError(f"hop ({hop}) must divide n_fft ({n_fft})")
    w = make_window(window, n_fft)
    t = np.arange(n_fft)
    k = np.arange(n_fft // 2 + 1)[:, None]
    arg = 2.0 * np.pi * k * t / n_fft
    filters = np.empty((2 * (n_fft // 2 + 1), n_fft))
    filters[0::2] = w * np.cos(arg)
    filters[1::2] = -w * np.sin(arg)
    return Filterbank(filters, hop, "stft", paired=True, window=w)


def make_free_filterbank(n_filters: int, kernel_size: int, stride: int, seed: int = 0) -> Filterbank:
    """Seeded Gaussian filters, each row scaled to unit L2 norm."""
    rows = _unit_gaussian_rows(n_filters, kernel_size, seed)
    return Filterbank(rows, stride, "free")


def _unit_gaussian_rows(n_rows, kernel_size, seed):
    if n_rows < 1 or kernel_size < 1:
        raise ValueError("n_filters and kernel_size must be positive")
    rng = np.random.default_rng(seed)
    rows = rng.standard_normal((n_rows, kernel_size))
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    # A zero row is practically impossible; guard anyway.
    norms[norms == 0] = 1.0
    return rows / norms


def hilbert_pair(h) -> np.ndarray:
    """Discrete Hilbert transform of a real filter, computed through the DFT."""
    h = np.asarray(h, dtype=np.float64)
    n = h.shape[-1]
    spectrum = np.fft.fft(h, axis=-1)
    gain = np.zeros(n)
    gain[0] = 1.0
    if n % 2 == 0:
        gain[1:n // 2] = 2.0
        gain[n // 2] = 1.0
    else:
        gain[1:(n + 1) // 2] = 2.0
    return np.fft.ifft(spectrum * gain, axis=-1).imag


def make_analytic_free_filterbank(n_filters: int, kernel_size: int, stride: int, seed: int = 0) -> Filterbank:
    """Free filters on even rows, their Hilbert transforms on odd rows."""
    if n_filters % 2:
        raise ValueError(f"analytic filterbanks need an even n_filters, got {n_filters}")
    real = _unit_gaussian_rows(n_filters // 2, kernel_size, seed)
    filters = np.empty((n_filters, kernel_size))
    filters[0::2] = real
    filters[1::2] = hilbert_pair(real)
    return Filterbank(filters, stride, "analytic_free", paired=True)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def make_sinc_filterbank(
    n_filters: int,
    kernel_size: int,
    stride: int,
    sample_rate_hz: int = 8000,
    min_low_hz: float = 50.0,
    min_band_hz: float = 50.0,
) -> Filterbank:
    """Hamming-windowed band-pass sinc pairs with mel-spaced cutoffs.

    Band ``k`` spans ``band_hz[k]``. Row ``2k`` is the cosine-phase impulse
    response, row ``2k + 1`` its sine-phase (Hilbert) counterpart.
    """
    if n_filters % 2:
        raise ValueError(f"sinc filterbanks need an even n_filters, got {n_filters}")
    if kernel_size % 2 == 0:
        raise ValueError(f"sinc kernel_size must be odd, got {kernel_size}")
    nyquist = sample_rate_hz / 2.0
    if min_low_hz < 0 or min_band_hz <= 0:
        raise ValueError("min_low_hz must be >= 0 and min_band_hz > 0")
    if min_low_hz + min_band_hz > nyquist:
        raise ValueError(
            f"band limits exceed Nyquist: min_low_hz + min_band_hz = {min_low_hz + min_band_hz} > {nyquist}"
        )
    n_bands = n_filters // 2
    edges = mel_to_hz(np.linspace(hz_to_mel(min_low_hz), hz_to_mel(nyquist), n_bands + 1))
    low = edges[:-1]
    high = np.clip(np.maximum(edges[1:], low + min_band_hz), min_low_hz, nyquist)
    low = np.clip(low, min_low_hz, nyquist)
    if np.any(high <= low):
        bad = int(np.argmax(high <= low))
        raise ValueError(f"degenerate sinc band {bad}: f_low={low[bad]} Hz >= f_high={high[bad]} Hz")
    return _sinc_from_bands(np.stack([low, high], axis=1), kernel_size, stride, sample_rate_hz)


def _sinc_from_bands(bands_hz, kernel_size, stride, sample_rate_hz):
    bands_hz = np.asarray(bands_hz, dtype=np.float64)
    if np.any(bands_hz[:, 1] <= bands_hz[:, 0]):
        raise ValueError("degenerate sinc band: f_low >= f_high")
    half = (kernel_size - 1) // 2
    t = np.arange(-half, half + 1, dtype=np.float64)
    window = np.hamming(kernel_size)
    f1 = bands_hz[:, :1] / sample_rate_hz
    f2 = bands_hz[:, 1:] / sample_rate_hz
    # np.sinc(x) = sin(pi x) / (pi x), so 2f sinc(2 f t) = 2f sin(2 pi f t) / (2 pi f t).
    cos_phase = 2.0 * f2 * np.sinc(2.0 * f2 * t) - 2.0 * f1 * np.sinc(2.0 * f1 * t)
    with np.errstate(divide="ignore", invalid="ignore"):
        sin_phase = (np.cos(2.0 * np.pi * f1 * t) - np.cos(2.0 * np.pi * f2 * t)) / (np.pi * t)
    sin_phase[:, half] = 0.0
    filters = np.empty((2 * bands_hz.shape[0], kernel_size))
    filters[0::2] = cos_phase * window
    filters[1::2] = sin_phase * window
    return Filterbank(filters, stride, "sinc", paired=True, band_hz=bands_hz, sample_rate_hz=sample_rate_hz)


def stft_synthesis(fb: Filterbank) -> Filterbank:
    """Synthesis bank matching an STFT analysis bank.

    Rows carry the inverse real-DFT weights (1/N for DC and Nyquist, 2/N
    elsewhere); the envelope is the squared window.
    """
    if fb.kind != "stft":
        raise ValueError("stft_synthesis needs an stft filterbank")
    if fb.is_synthesis:
        return fb
    n_fft = fb.kernel_size
    n_bins = fb.n_channels
    weight = np.full(n_bins, 2.0 / n_fft)
    weight[0] = 1.0 / n_fft
    weight[-1] = 1.0 / n_fft
    filters = fb.filters * np.repeat(weight, 2)[:, None]
    # Row 0 is the DC cosine filter, i.e. the window itself.
    window = fb.window if fb.window is not None else fb.filters[0]
    return replace(fb, filters=filters, envelope=window ** 2)


def pseudo_inverse(fb: Filterbank, regularization: float = 1e-8) -> Filterbank:
    """Least-squares decoder bank ``D = F (F^T F + lam I)^-1``.

    With ``D`` as synthesis filters each frame is reconstructed as
    ``D^T F frame``. The per-tap gain ``diag(D^T F)`` becomes the envelope that
    ``decode`` divides out after overlap-add.
    """
    F = fb.filters
    gram = F.T @ F
    if regularization == 0:
        cond = np.linalg.cond(gram)
        if not np.isfinite(cond) or cond > 1.0 / np.finfo(np.float64).eps:
            raise SingularFilterbankError(
                f"filter Gram matrix is numerically singular (cond={cond:.3g}); use regularization > 0"
            )
    gram = gram + regularization * np.eye(fb.kernel_size)
    try:
        D = np.linalg.solve(gram, F.T).T
    except np.linalg.LinAlgError as exc:
        raise SingularFilterbankError(f"cannot invert filter Gram matrix: {exc}") from exc
    envelope = np.einsum("rt,rt->t", D, F)
    return replace(fb, filters=D, envelope=envelope, window=None)


def default_synthesis(fb: Filterbank) -> Filterbank:
    """Decoder used by the pipeline: STFT synthesis or the pseudo-inverse."""
    if fb.is_synthesis:
        return fb
    if fb.kind == "stft":
        return stft_synthesis(fb)
    return pseudo_inverse(fb)


# -- encoder / decoder ------------------------------------------------------


def _padding(n_samples, kernel, stride):
    left = kernel - stride
    right = kernel - stride
    total = n_samples + left + right
    if total < kernel:
        right += kernel - total
        total = kernel
    # Extend so the last frame ends exactly at the padded end.
    right += (-(total - kernel)) % stride
    return left, right


def encode(fb: Filterbank, w: Waveform) -> TimeFrequencyRep:
    """Strided correlation of the padded signal with every filter."""
    x = np.asarray(w, dtype=np.float64)
    if x.size == 0:
        raise ValueError("cannot encode an empty signal")
    rate = w.sample_rate_hz if isinstance(w, Waveform) else (fb.sample_rate_hz or 0)
    K, S = fb.kernel_size, fb.stride
    left, right = _padding(x.size, K, S)
    xp = np.concatenate([np.zeros(left), x, np.zeros(right)])
    frames = _backend.frame_signal(xp, K, S)
    out = frames @ fb.filters.T
    if fb.paired:
        rep = (out[:, 0::2] + 1j * out[:, 1::2]).T
    else:
        rep = out.T.astype(np.complex128)
    return TimeFrequencyRep(np.ascontiguousarray(rep), S, K, rate, x.size)


def decode(fb: Filterbank, rep: TimeFrequencyRep, normalize: bool = True) -> Waveform:
    """Transposed convolution with overlap-add, then trim the encoder padding.

    An STFT analysis bank is turned into its synthesis bank first. With
    ``normalize=False`` the raw transposed convolution of ``fb.filters`` is
    returned (the exact adjoint of :func:`encode`).
    """
    if normalize and fb.kind == "stft" and not fb.is_synthesis:
        fb = stft_synthesis(fb)
    K, S = fb.kernel_size, fb.stride
    if rep.kernel_size != K or rep.stride != S:
        raise ValueError(
            f"representation framing (kernel={rep.kernel_size}, stride={rep.stride}) "
            f"does not match filterbank (kernel={K}, stride={S})"
        )
    if rep.frames.shape[0] != fb.n_channels:
        raise ValueError(
            f"representation has {rep.frames.shape[0]} channels, filterbank has {fb.n_channels}"
        )
    n_frames = rep.frames.shape[1]
    if fb.paired:
        coeffs = np.empty((n_frames, fb.n_filters))
        coeffs[:, 0::2] = rep.frames.real.T
        coeffs[:, 1::2] = rep.frames.imag.T
    else:
        coeffs = rep.frames.real.T
    contrib = coeffs @ fb.filters
    left, right = _padding(rep.n_samples, K, S)
    padded_len = rep.n_samples + left + right
    if (n_frames - 1) * S + K != padded_len:
        raise ValueError(
            f"{n_frames} frames do not match a {rep.n_samples}-sample signal "
            f"(expected {(padded_len - K) // S + 1})"
        )
    y = _backend.overlap_add(contrib, S, padded_len)
    if normalize and fb.envelope is not None:
        env = _backend.overlap_add(np.broadcast_to(fb.envelope, (n_frames, K)), S, padded_len)
        ok = env > _ENVELOPE_FLOOR * max(env.max(), 1.0)
        y[ok] /= env[ok]
    return Waveform(y[left:left + rep.n_samples], rep.sample_rate_hz or 1)


# -- magnitude / phase / masks ----------------------------------------------


def polar(rep: TimeFrequencyRep):
    """Magnitude and phase in (-pi, pi]; zero entries get phase 0."""
    frames = rep.frames
    mag = np.abs(frames)
    phase = np.angle(frames)
    phase[mag == 0] = 0.0
    # np.angle gives -pi on the negative real axis with a -0.0 imaginary part.
    phase[phase == -np.pi] = np.pi
    return mag, phase


def from_polar(magnitude, phase) -> np.ndarray:
    return np.asarray(magnitude) * np.exp(1j * np.asarray(phase))


def apply_mask(rep: TimeFrequencyRep, mask, kind: str = "magnitude") -> TimeFrequencyRep:
    """Entrywise masking.

    ``magnitude`` scales ``|rep|`` and keeps the phase, which for a real,
    non-negative mask is the same as multiplying the complex entries.
    """
    mask = np.asarray(mask)
    if mask.shape != rep.frames.shape:
        raise ValueError(f"mask shape {mask.shape} does not match representation {rep.frames.shape}")
    if kind == "magnitude":
        if np.iscomplexobj(mask):
            raise ValueError("magnitude masks must be real")
        if np.any(mask < 0):
            raise ValueError("magnitude masks must be non-negative")
        return rep.with_frames(rep.frames * mask)
    if kind == "complex":
        return rep.with_frames(rep.frames * mask)
    raise ValueError(f"mask kind must be 'magnitude' or 'complex', got {kind!r}")


# -- export / import --------------------------------------------------------

_HEADER = "sepkit-filterbank"


def save_filterbank(fb: Filterbank, path) -> None:
    """Text export: a header line followed by the row-major filter matrix."""
    header = (
        f"{_HEADER} n_filters={fb.n_filters} kernel_size={fb.kernel_size} "
        f"stride={fb.stride} kind={fb.kind} paired={int(fb.paired)}"
    )
    np.savetxt(os.fspath(path), fb.filters, fmt="%.17g", header=header)


def load_filterbank(path) -> Filterbank:
    path = os.fspath(path)
    with open(path) as fh:
        first = fh.readline().lstrip("#").split()
    if not first or first[0] != _HEADER:
        raise ValueError(f"{path}: not a filterbank file")
    meta = dict(item.split("=", 1) for item in first[1:])
    filters = np.loadtxt(path, ndmin=2)
    n_filters, kernel = int(meta["n_filters"]), int(meta["kernel_size"])
    if filters.shape != (n_filters, kernel):
        raise ValueError(f"{path}: header says {(n_filters, kernel)}, data is {filters.shape}")
    return Filterbank(filters, int(meta["stride"]), meta["kind"], paired=bool(int(meta["paired"])))
