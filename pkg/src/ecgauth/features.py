"""DCT feature vectors for RR segments.

The transform is the orthonormal DCT-II::

    y[0] = sqrt(1/N) * sum_n x[n]
    y[k] = sqrt(2/N) * sum_n x[n] * cos(pi * (2n + 1) * k / (2N)),   k >= 1

Some printed forms of this definition use ``(2n - 1)`` in the cosine
argument and ``2/sqrt(N)`` as the scale. Neither is orthogonal for
``n = 0..N-1``, so the standard orthonormal convention is used here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import N_RESAMPLE, RrSegment
from .errors import EmptyInput, FlatSegment

M_COEFFS = 64
PIPELINE_VERSION = 1


@dataclass(frozen=True)
class PipelineFingerprint:
    n_resample: int = N_RESAMPLE
    m_coeffs: int = M_COEFFS
    pipeline_version: int = PIPELINE_VERSION


@dataclass(frozen=True, eq=False)
class FeatureVector:
    coeffs: np.ndarray
    fingerprint: PipelineFingerprint

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.float64).ravel()
        if c.size != self.fingerprint.m_coeffs:
            raise ValueError(
                f"expected {self.fingerprint.m_coeffs} coefficients, got {c.size}"
            )
        if not np.all(np.isfinite(c)):
            raise ValueError("feature coefficients must be finite")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    def __eq__(self, other):
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return self.fingerprint == other.fingerprint and np.array_equal(self.coeffs, other.coeffs)

    __hash__ = None


def _twiddle(n: int) -> np.ndarray:
    return np.exp(-1j * np.pi * np.arange(n) / (2 * n))


def _scale(n: int) -> np.ndarray:
    s = np.full(n, np.sqrt(2.0 / n))
    s[0] = np.sqrt(1.0 / n)
    return s


def dct(x) -> np.ndarray:
    """Orthonormal DCT-II of a 1-D sequence, via one length-N complex FFT."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise EmptyInput("dct needs a non-empty 1-D sequence")
    n = x.size
    # even samples in order, then odd samples reversed
    v = np.concatenate([x[::2], x[1::2][::-1]])
    return (np.fft.fft(v) * _twiddle(n)).real * _scale(n)


def idct(y) -> np.ndarray:
    """Inverse of :func:`dct` (orthonormal DCT-III)."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.size == 0:
        raise EmptyInput("idct needs a non-empty 1-D sequence")
    n = y.size
    c = y / _scale(n)
    mirrored = np.r_[0.0, c[:0:-1]]  # c[N - k], with c[N] taken as 0
    v = np.fft.ifft((c - 1j * mirrored) / _twiddle(n)).real
    x = np.empty(n)
    half = (n + 1) // 2
    x[::2] = v[:half]
    x[1::2] = v[half:][::-1]
    return x


def extract(seg: RrSegment, m: int = M_COEFFS) -> FeatureVector:
    """z-score the segment waveform, transform, keep the first `m` coefficients."""
    w = np.asarray(seg.waveform, dtype=np.float64)
    if not 1 <= m <= w.size:
        raise ValueError(f"m must be in [1, {w.size}], got {m}")
    sd = w.std()
    if sd < 1e-12:
        raise FlatSegment("segment waveform has zero variance")
    z = (w - w.mean()) / sd
    fp = PipelineFingerprint(n_resample=w.size, m_coeffs=m)
    return FeatureVector(dct(z)[:m], fp)
