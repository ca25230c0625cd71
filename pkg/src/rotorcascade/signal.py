"""Vibration waves, amplitude spectra and the discrete wavelet transform.

The wavelet transform is an orthonormal periodized filter bank: every level
halves the length exactly, so coefficient energy equals signal energy and the
inverse reproduces the input to rounding error.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientLengthError, InvalidInputError

WAVE_LENGTH = 1024
N_SENSORS = 6
DWT_LEVELS = 4

# Daubechies wavelet with 4 vanishing moments (8 taps), reconstruction low-pass.
_DB4 = np.array([
    0.23037781330889650086,
    0.71484657055291564709,
    0.63088076792985890788,
    -0.027983769416859854211,
    -0.18703481171909308408,
    0.030841381835560763627,
    0.032883011666885199735,
    -0.010597401785069032105,
])
_HAAR = np.array([1.0, 1.0]) / np.sqrt(2.0)

WAVELETS = {"db4": _DB4, "haar": _HAAR}


@dataclass(frozen=True)
class Wave:
    """One sensor time series at one acquisition time (displacement in um)."""

    machine_id: str
    sensor_id: int
    timestamp: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size < 2:
            raise InvalidInputError("a wave needs at least 2 samples")
        if not np.all(np.isfinite(samples)):
            raise InvalidInputError(
                f"non-finite samples in wave {self.machine_id}/S{self.sensor_id}")
        if not 1 <= int(self.sensor_id) <= N_SENSORS:
            raise InvalidInputError(f"sensor_id must be in 1..6, got {self.sensor_id}")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    def with_samples(self, samples) -> "Wave":
        return Wave(self.machine_id, self.sensor_id, self.timestamp, samples)


@dataclass(frozen=True)
class Spectrum:
    amplitudes: np.ndarray

    @property
    def bin_indices(self) -> np.ndarray:
        return np.arange(self.amplitudes.size)


@dataclass(frozen=True)
class WaveletDecomposition:
    """Detail layers ordered finest first (``detail_coeffs[0]`` is layer 1)."""

    detail_coeffs: tuple
    approx_coeffs: np.ndarray
    basis_name: str

    @property
    def levels(self) -> int:
        return len(self.detail_coeffs)

    def energies(self) -> np.ndarray:
        return np.array([float(np.dot(d, d)) for d in self.detail_coeffs])

    def approx_energy(self) -> float:
        return float(np.dot(self.approx_coeffs, self.approx_coeffs))


def _as_samples(wave) -> np.ndarray:
    if isinstance(wave, Wave):
        return wave.samples
    samples = np.asarray(wave, dtype=float)
    if samples.ndim != 1:
        raise InvalidInputError("expected a 1-D sample sequence")
    if not np.all(np.isfinite(samples)):
        raise InvalidInputError("non-finite samples")
    return samples


def fft_spectrum(wave) -> Spectrum:
    """One-sided amplitude spectrum scaled so a sinusoid of amplitude A reads A.

    Bins strictly between DC and Nyquist are scaled by 2/M; DC and (for even
    M) Nyquist by 1/M.
    """
    x = _as_samples(wave)
    m = x.size
    if m < 2:
        raise InvalidInputError("fft needs at least 2 samples")
    amp = np.abs(np.fft.rfft(x)) / m
    amp[1:] *= 2.0
    if m % 2 == 0:
        amp[-1] /= 2.0
    return Spectrum(amp)


def _filters(basis: str):
    try:
        lo = WAVELETS[basis]
    except KeyError:
        raise InvalidInputError(f"unknown wavelet basis {basis!r}") from None
    k = np.arange(lo.size)
    hi = (-1.0) ** k * lo[::-1]
    return lo, hi


def _analysis_step(x, lo, hi):
    n = x.size // 2
    idx = (2 * np.arange(n)[:, None] + np.arange(lo.size)[None, :]) % x.size
    windows = x[idx]
    return windows @ lo, windows @ hi


def _synthesis_step(approx, detail, lo, hi):
    n = approx.size
    out = np.zeros(2 * n)
    idx = (2 * np.arange(n)[:, None] + np.arange(lo.size)[None, :]) % (2 * n)
    np.add.at(out, idx, approx[:, None] * lo[None, :] + detail[:, None] * hi[None, :])
    return out


def dwt_decompose(wave, levels: int = DWT_LEVELS, basis: str = "db4") -> WaveletDecomposition:
    x = _as_samples(wave)
    if levels < 1:
        raise InvalidInputError("levels must be >= 1")
    if x.size < 2 ** levels or x.size % 2 ** levels:
        raise InsufficientLengthError(
            f"wave length {x.size} must be a positive multiple of 2**{levels}")
    lo, hi = _filters(basis)
    details = []
    approx = x
    for _ in range(levels):
        approx, detail = _analysis_step(approx, lo, hi)
        details.append(detail)
    return WaveletDecomposition(tuple(details), approx, basis)


def dwt_reconstruct(decomp: WaveletDecomposition) -> np.ndarray:
    lo, hi = _filters(decomp.basis_name)
    x = decomp.approx_coeffs
    for detail in reversed(decomp.detail_coeffs):
        x = _synthesis_step(x, detail, lo, hi)
    return x


def noise_sigma(decomp: WaveletDecomposition) -> float:
    """Robust noise level from the finest detail layer (MAD / 0.6745)."""
    return float(np.median(np.abs(decomp.detail_coeffs[0])) / 0.6745)


def soft_threshold(x: np.ndarray, thr: float) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - thr, 0.0)


def wavelet_denoise(wave, levels: int = DWT_LEVELS, basis: str = "db4", sigma=None):
    """Soft-threshold every detail layer at sigma * sqrt(2 ln M) and rebuild.

    ``sigma`` defaults to the wave's own finest-layer estimate. Returns a
    ``Wave`` when given one, otherwise an array.
    """
    x = _as_samples(wave)
    if x.size < 16:
        raise InsufficientLengthError("denoising needs at least 16 samples")
    decomp = dwt_decompose(x, levels, basis)
    if sigma is None:
        sigma = noise_sigma(decomp)
    thr = sigma * np.sqrt(2.0 * np.log(x.size))
    shrunk = WaveletDecomposition(
        tuple(soft_threshold(d, thr) for d in decomp.detail_coeffs),
        decomp.approx_coeffs,
        basis,
    )
    out = dwt_reconstruct(shrunk)
    if isinstance(wave, Wave):
        return wave.with_samples(out)
    return out
