"""Synthetic ECG for tests and demos.

Each beat is a sum of five Gaussian waves (P, Q, R, S, T). A subject seed
fixes the morphology and mean heart rate; a session seed fixes beat-to-beat
variability and noise, so two sessions of one subject look like two
recordings of the same person.
"""

from __future__ import annotations

import numpy as np

from .ingest import EcgRecord, Source

# wave: (amplitude mV, offset from R in s, width s); offsets of T scale with RR
_BASE = {
    "P": (0.15, -0.20, 0.025),
    "Q": (-0.12, -0.03, 0.010),
    "R": (1.20, 0.00, 0.011),
    "S": (-0.25, 0.03, 0.011),
    "T": (0.30, 0.28, 0.045),
}


def subject_morphology(subject_seed: int) -> dict:
    rng = np.random.default_rng([subject_seed, 0xECC])
    waves = {}
    for name, (a, mu, w) in _BASE.items():
        amp = a * rng.uniform(0.6, 1.5)
        if name == "T" and rng.random() < 0.15:
            amp = -amp * 0.6
        shift = rng.uniform(-0.2, 0.2) * (abs(mu) if mu else 0.004)
        waves[name] = (amp, mu + shift, w * rng.uniform(0.75, 1.35))
    return {"waves": waves, "hr_bpm": rng.uniform(58, 88)}


def synthetic_ecg(subject_seed: int, seconds: float = 10.0, fs_hz: float = 360.0,
                  session_seed: int = 0, noise_mv: float = 0.01, wander_mv: float = 0.0,
                  hr_bpm: float | None = None, record_id: str | None = None) -> EcgRecord:
    """Generate `seconds` of single-lead ECG. R-apex sample indices are in
    ``record.meta["r_peaks"]``."""
    morph = subject_morphology(subject_seed)
    rng = np.random.default_rng([subject_seed, session_seed, 0x5E5])
    mean_rr = 60.0 / (hr_bpm or morph["hr_bpm"])
    n = int(round(seconds * fs_hz))
    t = np.arange(n) / fs_hz

    beats = []
    tb = 0.35 + rng.uniform(0, 0.2)
    while tb < seconds + 1.0:
        rr = mean_rr * (1 + 0.03 * rng.standard_normal())
        beats.append((tb, rr))
        tb += rr

    x = np.zeros(n)
    peaks = []
    for tb, rr in beats:
        jitter = 1 + 0.02 * rng.standard_normal()
        for name, (a, mu, w) in morph["waves"].items():
            centre = tb + (mu * np.sqrt(rr / mean_rr) if name == "T" else mu)
            lo, hi = np.searchsorted(t, [centre - 5 * w, centre + 5 * w])
            x[lo:hi] += a * jitter * np.exp(-0.5 * ((t[lo:hi] - centre) / w) ** 2)
        if tb < seconds:
            peaks.append(int(round(tb * fs_hz)))
    peaks = [p for p in peaks if p < n]

    if wander_mv:
        phase = rng.uniform(0, 2 * np.pi)
        x += wander_mv * np.sin(2 * np.pi * 0.25 * t + phase)
    if noise_mv:
        x += noise_mv * rng.standard_normal(n)
    return EcgRecord(
        record_id or f"synth{subject_seed}",
        fs_hz,
        x,
        Source.SYNTHETIC,
        {"r_peaks": peaks, "subject_seed": subject_seed, "session_seed": session_seed},
    )
