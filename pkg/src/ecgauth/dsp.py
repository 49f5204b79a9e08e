"""Preprocessing, R-peak detection and RR segmentation.

All filter and detector constants are fixed; changing any of them means a
new ``PIPELINE_VERSION`` in :mod:`ecgauth.features`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import median_filter

from .errors import InputTooShort, NotEnoughPeaks
from .ingest import EcgRecord

BASELINE_WINDOWS_MS = (200.0, 600.0)

LOWPASS_CUTOFF_HZ = 35.0
LOWPASS_TAPS = 81

INTEGRATION_MS = 150.0
THRESHOLD_FACTOR = 0.3
PEAK_AVERAGING_WEIGHT = 0.125
INIT_WINDOW_S = 2.0
REFRACTORY_MS = 200.0
REFINE_MS = 50.0

N_RESAMPLE = 256


def _odd_window(ms: float, fs: float) -> int:
    w = int(round(ms * fs / 1000.0))
    return w if w % 2 else w + 1


def centered_median(x: np.ndarray, width: int) -> np.ndarray:
    """Running median over an odd `width`; near the ends the window shrinks
    symmetrically so that it stays centred on the output sample."""
    n = x.size
    half = width // 2
    out = median_filter(x, size=width, mode="nearest")
    for i in range(min(half, n)):
        out[i] = np.median(x[: 2 * i + 1])
        j = n - 1 - i
        out[j] = np.median(x[j - i :])
    return out


def remove_baseline(record: EcgRecord) -> EcgRecord:
    """Subtract a two-stage (200 ms then 600 ms) median baseline estimate.

    Records shorter than the longer window are returned unchanged.
    """
    x = record.samples
    widths = [_odd_window(ms, record.fs_hz) for ms in BASELINE_WINDOWS_MS]
    if max(widths) > x.size:
        return record
    baseline = x.copy()
    for w in widths:
        baseline = centered_median(baseline, w)
    return record.with_samples(x - baseline)


def lowpass_taps(fs_hz: float, cutoff_hz: float = LOWPASS_CUTOFF_HZ, n_taps: int = LOWPASS_TAPS):
    """Hamming-windowed sinc low-pass, normalised to unity gain at DC."""
    fc = cutoff_hz / fs_hz  # cycles per sample
    n = np.arange(n_taps) - (n_taps - 1) / 2.0
    h = 2 * fc * np.sinc(2 * fc * n) * np.hamming(n_taps)
    return h / h.sum()


def lowpass(record: EcgRecord) -> EcgRecord:
    x = record.samples
    if x.size < LOWPASS_TAPS:
        raise InputTooShort(f"low-pass needs at least {LOWPASS_TAPS} samples, got {x.size}")
    h = lowpass_taps(record.fs_hz)
    # odd symmetric taps: 'same' drops (taps - 1) / 2 samples at each end,
    # which is exactly the group delay
    return record.with_samples(np.convolve(x, h, mode="same"))


def preprocess(record: EcgRecord) -> EcgRecord:
    return lowpass(remove_baseline(record))


def detect_rpeaks(record: EcgRecord) -> np.ndarray:
    """Pan-Tompkins style R-peak detector.

    Expects a baseline-removed, low-passed record. Returns strictly
    increasing sample indices at least one refractory period apart.
    """
    x = record.samples
    fs = record.fs_hz
    n = x.size
    if n < 5:
        return np.zeros(0, dtype=np.int64)

    # y[n] = (2x[n] + x[n-1] - x[n-3] - 2x[n-4]) / 8, zero history before the start
    xp = np.r_[np.zeros(4), x]
    deriv = (2 * xp[4:] + xp[3:-1] - xp[1:-3] - 2 * xp[:-4]) / 8.0
    w = max(1, int(round(INTEGRATION_MS * fs / 1000.0)))
    mwi = np.convolve(deriv**2, np.ones(w) / w)[:n]
    # derivative delays by 2 samples, the trailing integrator by (w - 1) / 2
    delay = 2 + (w - 1) // 2

    refractory = int(round(REFRACTORY_MS * fs / 1000.0))
    refine = int(round(REFINE_MS * fs / 1000.0))

    estimate = float(mwi[: max(1, int(round(INIT_WINDOW_S * fs)))].max())
    peaks = []
    pos = 0
    while pos < n:
        threshold = THRESHOLD_FACTOR * estimate
        above = mwi[pos:] > threshold
        if not above.any():
            break
        start = pos + int(np.argmax(above))
        below = mwi[start:] <= threshold
        stop = start + int(np.argmax(below)) if below.any() else n
        pos = stop
        # one candidate per supra-threshold run: the integrator's maximum
        c = start + int(np.argmax(mwi[start:stop]))
        value = mwi[c]
        centre = c - delay
        lo, hi = max(0, centre - refine), min(n, centre + refine + 1)
        if lo >= hi:
            continue
        r = lo + int(np.argmax(x[lo:hi]))
        if peaks and r - peaks[-1] < refractory:
            continue
        peaks.append(r)
        estimate = PEAK_AVERAGING_WEIGHT * value + (1 - PEAK_AVERAGING_WEIGHT) * estimate
    return np.asarray(peaks, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class RrSegment:
    """One R-to-R interval resampled to a fixed length."""

    start_sample: int
    end_sample: int
    t_start_ms: float
    t_end_ms: float
    waveform: np.ndarray

    def __post_init__(self):
        if self.end_sample <= self.start_sample:
            raise ValueError("an RR segment must end after it starts")


def segment_rr(record: EcgRecord, peaks, n_out: int = N_RESAMPLE) -> list[RrSegment]:
    """Cut between consecutive peaks and linearly resample each interval to `n_out` points."""
    p = np.asarray(peaks, dtype=np.int64)
    if p.size < 2:
        raise NotEnoughPeaks(f"need at least 2 R-peaks, found {p.size}")
    if np.any(np.diff(p) <= 0):
        raise ValueError("peaks must be strictly increasing")
    if p[0] < 0 or p[-1] >= len(record):
        raise ValueError("peaks must lie inside the record")
    if n_out < 2:
        raise ValueError("n_out must be at least 2")

    x = record.samples
    grid = np.arange(x.size)
    to_ms = 1000.0 / record.fs_hz
    segments = []
    for a, b in zip(p[:-1].tolist(), p[1:].tolist()):
        positions = np.linspace(a, b, n_out)
        wave = np.interp(positions, grid[a : b + 1], x[a : b + 1])
        wave.flags.writeable = False
        segments.append(RrSegment(a, b, a * to_ms, b * to_ms, wave))
    return segments


def rr_segments(record: EcgRecord, n_out: int = N_RESAMPLE) -> list[RrSegment]:
    """Full front end: filter, detect, cut. Segments come from the filtered signal."""
    clean = preprocess(record)
    return segment_rr(clean, detect_rpeaks(clean), n_out)
