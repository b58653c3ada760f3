"""Waveform containers, mono WAV I/O, power measurement and SNR-controlled mixing."""
from __future__ import annotations

import os
import warnings
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from scipy.io import wavfile

INT16_SCALE = 32768.0


class WavFormatError(ValueError):
    """The file is a WAV file, but not one this module accepts."""


class MultiChannelError(WavFormatError):
    pass


class UnsupportedEncodingError(WavFormatError):
    pass


class ZeroPowerError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Waveform:
    """Single-channel signal at a fixed sample rate.

    ``samples`` is stored as a read-only float64 array.
    """

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.float64, copy=True).reshape(-1)
        if not np.all(np.isfinite(x)):
            raise ValueError("waveform samples must be finite")
        rate = int(self.sample_rate_hz)
        if rate <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate_hz", rate)

    def __len__(self):
        return self.samples.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.samples
        return self.samples.astype(dtype)

    def with_samples(self, samples) -> "Waveform":
        return Waveform(samples, self.sample_rate_hz)


@dataclass(frozen=True, eq=False)
class SourceSet:
    """Ordered collection of equal-length, equal-rate waveforms."""

    sources: tuple

    def __post_init__(self):
        srcs = tuple(self.sources)
        if len(srcs) < 1:
            raise ValueError("a SourceSet needs at least one source")
        n = len(srcs[0])
        rate = srcs[0].sample_rate_hz
        for j, s in enumerate(srcs):
            if len(s) != n:
                raise ValueError(f"source {j} has {len(s)} samples, expected {n}")
            if s.sample_rate_hz != rate:
                raise ValueError(f"source {j} has rate {s.sample_rate_hz}, expected {rate}")
        object.__setattr__(self, "sources", srcs)

    @classmethod
    def from_array(cls, array, sample_rate_hz: int) -> "SourceSet":
        array = np.atleast_2d(np.asarray(array, dtype=np.float64))
        return cls(tuple(Waveform(row, sample_rate_hz) for row in array))

    def __len__(self):
        return len(self.sources)

    def __iter__(self) -> Iterator[Waveform]:
        return iter(self.sources)

    def __getitem__(self, idx) -> Waveform:
        return self.sources[idx]

    @property
    def n_sources(self) -> int:
        return len(self.sources)

    @property
    def n_samples(self) -> int:
        return len(self.sources[0])

    @property
    def sample_rate_hz(self) -> int:
        return self.sources[0].sample_rate_hz

    def as_array(self) -> np.ndarray:
        """(J, T) float64 copy."""
        return np.stack([s.samples for s in self.sources])

    def permuted(self, perm: Sequence[int]) -> "SourceSet":
        return SourceSet(tuple(self.sources[i] for i in perm))


def read_wav(path) -> Waveform:
    """Read a mono 16-bit PCM or 32-bit float WAV file.

    16-bit samples are divided by 32768; float samples pass through.
    """
    path = os.fspath(path)
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such WAV file: {path}")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except wavfile.WavFileWarning as exc:
        raise WavFormatError(f"{path}: {exc}") from exc
    except ValueError as exc:
        raise UnsupportedEncodingError(f"{path}: {exc}") from exc
    if data.ndim != 1:
        raise MultiChannelError(f"{path}: multi-channel unsupported ({data.shape[1]} channels)")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / INT16_SCALE
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise UnsupportedEncodingError(
            f"{path}: unsupported sample encoding {data.dtype}; expected int16 or float32"
        )
    return Waveform(samples, rate)


def write_wav(w: Waveform, path, encoding: str = "int16") -> None:
    """Write ``w`` as a mono WAV file.

    In ``int16`` mode samples are clipped to ``[-1, 1 - 2**-15]`` and rounded
    to the nearest code.
    """
    if len(w) == 0:
        raise ValueError("cannot write an empty waveform")
    if encoding == "int16":
        clipped = np.clip(w.samples, -1.0, 1.0 - 1.0 / INT16_SCALE)
        data = np.round(clipped * INT16_SCALE).astype(np.int16)
    elif encoding == "float32":
        data = w.samples.astype(np.float32)
    else:
        raise ValueError(f"encoding must be 'int16' or 'float32', got {encoding!r}")
    path = os.fspath(path)
    try:
        wavfile.write(path, w.sample_rate_hz, data)
    except OSError as exc:
        raise OSError(f"cannot write WAV file {path}: {exc}") from exc


def power_db(w) -> float:
    """Mean power in dB, ``10 * log10(mean(x ** 2))``."""
    x = np.asarray(w, dtype=np.float64)
    if x.size == 0:
        raise ValueError("power of an empty signal is undefined")
    p = float(np.mean(x * x))
    if p == 0.0:
        raise ZeroPowerError("zero-power signal")
    return 10.0 * np.log10(p)


def make_mixture(
    sources: SourceSet,
    snr_db: Sequence[float],
    noise: Waveform | None = None,
    noise_snr_db: float | None = None,
) -> tuple[Waveform, SourceSet]:
    """Rescale sources relative to source 1 and sum them (plus noise).

    Source ``j >= 2`` is scaled so that ``power_db(s1) - power_db(sj)`` equals
    ``snr_db[j - 2]``. Noise, if given, is cropped from the start to the source
    length and scaled against source 1 by ``noise_snr_db``.

    Returns the mixture and the rescaled sources, which are the ground truth.
    """
    snr_db = [float(v) for v in snr_db]
    if len(snr_db) != sources.n_sources - 1:
        raise ValueError(
            f"expected {sources.n_sources - 1} SNR values for {sources.n_sources} sources, got {len(snr_db)}"
        )
    ref_db = power_db(sources[0])
    scaled = [sources[0].samples.copy()]
    for j, snr in enumerate(snr_db, start=1):
        src_db = power_db(sources[j])
        gain = 10.0 ** ((ref_db - snr - src_db) / 20.0)
        scaled.append(gain * sources[j].samples)
    rate = sources.sample_rate_hz
    mix = scaled[0].copy()
    for s in scaled[1:]:
        mix += s
    if noise is not None:
        if noise_snr_db is None:
            raise ValueError("noise_snr_db is required when noise is given")
        if noise.sample_rate_hz != rate:
            raise ValueError("noise sample rate differs from sources")
        if len(noise) < sources.n_samples:
            raise ValueError(
                f"noise has {len(noise)} samples, need at least {sources.n_samples}"
            )
        n = noise.samples[: sources.n_samples]
        gain = 10.0 ** ((ref_db - float(noise_snr_db) - power_db(n)) / 20.0)
        mix += gain * n
    rescaled = SourceSet(tuple(Waveform(s, rate) for s in scaled))
    return Waveform(mix, rate), rescaled
