"""ECG biometric authentication from RR-interval DCT features."""

from .authflow import AuthDecision, AuthSession, State, Template, enroll, identify, verify
from .features import FeatureVector, PipelineFingerprint, dct, extract, idct
from .ingest import EcgRecord, read_csv, read_wfdb
from .matching import pearson, score_interval

__version__ = "0.1.0"

__all__ = [
    "AuthDecision", "AuthSession", "EcgRecord", "FeatureVector", "PipelineFingerprint",
    "State", "Template", "dct", "enroll", "extract", "idct", "identify", "pearson",
    "read_csv", "read_wfdb", "score_interval", "verify",
]
