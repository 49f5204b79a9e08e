"""Correlation scoring of feature vectors against a template."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, FingerprintMismatch, LengthMismatch
from .features import FeatureVector

DEFAULT_THRESHOLD = 0.95


def pearson(k, l) -> float:
    """Pearson product-moment correlation, clamped to [-1, 1].

    Symmetric bit-for-bit in its arguments.
    """
    k = np.asarray(k, dtype=np.float64).ravel()
    l = np.asarray(l, dtype=np.float64).ravel()
    if k.size != l.size:
        raise LengthMismatch(f"lengths differ: {k.size} vs {l.size}")
    if k.size < 2:
        raise LengthMismatch("correlation needs at least 2 points")
    dk = k - k.mean()
    dl = l - l.mean()
    if dk.std() <= 1e-12 or dl.std() <= 1e-12:
        raise DegenerateInput("correlation of a constant sequence is undefined")
    num = float(np.dot(dk, dl))
    den = math.sqrt(float(np.dot(dk, dk)) * float(np.dot(dl, dl)))
    return min(1.0, max(-1.0, num / den))


def passes(cf: float, threshold: float) -> bool:
    # strictly above: a score equal to the threshold is a failure
    return cf > threshold


@dataclass(frozen=True)
class IntervalScore:
    cf: float
    passed: bool
    threshold: float
    t_signal_ms: float

    @classmethod
    def decide(cls, cf: float, threshold: float, t_signal_ms: float = 0.0) -> "IntervalScore":
        return cls(cf, passes(cf, threshold), threshold, t_signal_ms)


def score_interval(template: FeatureVector, probe: FeatureVector, threshold: float,
                   t_signal_ms: float) -> IntervalScore:
    """Correlate coefficients 1..M-1 (the DC term is ~0 by construction)."""
    if template.fingerprint != probe.fingerprint:
        raise FingerprintMismatch(f"{template.fingerprint} vs {probe.fingerprint}")
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    cf = pearson(template.coeffs[1:], probe.coeffs[1:])
    return IntervalScore.decide(cf, threshold, t_signal_ms)
