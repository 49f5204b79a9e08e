"""Shared test utilities (importable from any test module)."""

import math
import os
from pathlib import Path

import numpy as np

from ecgauth.authflow import Template
from ecgauth.features import FeatureVector, PipelineFingerprint

FP = PipelineFingerprint()

# MIT-BIH Arrhythmia records that are predominantly normal sinus rhythm
NORMAL_SINUS = ["100", "101", "103", "112", "113", "115", "116", "117", "121", "122", "123"]


def mitdb_dir() -> Path:
    return Path(os.environ.get("ECGAUTH_MITDB", Path(__file__).parent / "data" / "mitdb"))


def naive_dct(x):
    """Direct O(N^2) evaluation of the orthonormal DCT-II definition."""
    n = len(x)
    out = []
    for k in range(n):
        s = sum(x[i] * math.cos(math.pi * (2 * i + 1) * k / (2 * n)) for i in range(n))
        out.append(s * math.sqrt((1 if k == 0 else 2) / n))
    return np.array(out)


def crc32_bitwise(data: bytes) -> int:
    """Reflected CRC-32 (poly 0xEDB88320, init/xorout 0xFFFFFFFF), bit by bit."""
    crc = 0xFFFFFFFF
    for byte in data:
        crc ^= byte
        for _ in range(8):
            crc = (crc >> 1) ^ (0xEDB88320 if crc & 1 else 0)
    return crc ^ 0xFFFFFFFF


def random_features(rng, fp=FP) -> FeatureVector:
    c = rng.standard_normal(fp.m_coeffs)
    c[0] = 0.0
    return FeatureVector(c, fp)


def make_template(subject="alice", seed=0, fp=FP) -> Template:
    return Template(subject, random_features(np.random.default_rng(seed), fp), 1_700_000_000, "test")


def probe_with_cf(template_fv: FeatureVector, cf: float, seed: int = 0) -> FeatureVector:
    """A probe whose correlation with the template (coefficients 1..M-1) is `cf`."""
    rng = np.random.default_rng(seed)
    t = template_fv.coeffs[1:]
    u = t - t.mean()
    u /= np.linalg.norm(u)
    e = rng.standard_normal(t.size)
    e -= e.mean()
    e -= np.dot(e, u) * u
    e /= np.linalg.norm(e)
    p = cf * u + math.sqrt(max(0.0, 1 - cf * cf)) * e
    return FeatureVector(np.r_[0.0, p], template_fv.fingerprint)


def random_text(rng, max_len=12) -> str:
    alphabet = "abcxyz019_-éß中"
    return "".join(rng.choice(list(alphabet), size=int(rng.integers(0, max_len + 1))))


def random_message(rng):
    """One randomized protocol message of a randomly chosen type."""
    from ecgauth.proto import wire

    def reals():
        n = int(rng.integers(0, 70))
        return tuple(float(v) for v in rng.standard_normal(n) * 10.0 ** rng.integers(-5, 6))

    def fp():
        return PipelineFingerprint(int(rng.integers(1, 2**32)), int(rng.integers(1, 2**32)),
                                   int(rng.integers(0, 2**16)))

    kind = int(rng.integers(0, 9))
    if kind == 0:
        return wire.EnrollReq(random_text(rng), fp(), reals())
    if kind == 1:
        return wire.EnrollOk()
    if kind == 2:
        return wire.AuthBegin(random_text(rng), fp())
    if kind == 3:
        return wire.SessionOk(int(rng.integers(0, 2**32)))
    if kind == 4:
        return wire.Feature(int(rng.integers(0, 2**32)), reals())
    if kind == 5:
        cf = float(rng.uniform(-1, 1)) if rng.random() < 0.7 else None
        return wire.AuthStatus(int(rng.integers(0, 3)), cf, int(rng.integers(0, 4)))
    if kind == 6:
        return wire.IdentBegin(fp())
    if kind == 7:
        return wire.IdentResult(random_text(rng) if rng.random() < 0.5 else None)
    return wire.Error(int(rng.integers(0, 2**16)), random_text(rng, 40))
