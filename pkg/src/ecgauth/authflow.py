"""Enrollment, verification sessions and one-to-many identification."""

from __future__ import annotations

import enum
import logging
import time
from collections import deque
from dataclasses import dataclass, field

from .dsp import RrSegment, rr_segments
from .errors import (
    EmptyTemplateSet,
    FingerprintMismatch,
    FlatSegment,
    InvalidBudget,
    InvalidThreshold,
    NotEnoughPeaks,
    SessionTerminal,
)
from .features import M_COEFFS, FeatureVector, extract
from .ingest import EcgRecord
from .matching import DEFAULT_THRESHOLD, IntervalScore, score_interval

log = logging.getLogger(__name__)

DEFAULT_BUDGET_MS = 10_000
WINDOW = 3
MAX_SUBJECT_BYTES = 64


class State(enum.IntEnum):
    PENDING = 0
    ACCEPTED = 1
    REJECTED = 2


@dataclass(frozen=True)
class Template:
    subject_id: str
    features: FeatureVector
    enrolled_at: int = 0
    source_record: str = ""

    def __post_init__(self):
        if not self.subject_id or len(self.subject_id.encode("utf-8")) > MAX_SUBJECT_BYTES:
            raise ValueError(f"subject id must be 1..{MAX_SUBJECT_BYTES} UTF-8 bytes")


def signal_time_ms(seg: RrSegment) -> int:
    """When an interval becomes available: the signal time of its closing R-peak."""
    return int(round(seg.t_end_ms))


def enroll(record: EcgRecord, subject_id: str, m: int = M_COEFFS,
           enrolled_at: int | None = None) -> Template:
    """Build a template from the first RR interval of `record`."""
    first = rr_segments(record)[0]
    return Template(
        subject_id=subject_id,
        features=extract(first, m),
        enrolled_at=int(time.time()) if enrolled_at is None else enrolled_at,
        source_record=record.record_id,
    )


class AuthSession:
    """Sliding three-interval verification against one template.

    Accepts as soon as the three most recent intervals all pass; rejects once
    a probe arrives past the signal-time budget. Terminal states are final.
    """

    def __init__(self, template: Template, threshold: float = DEFAULT_THRESHOLD,
                 budget_ms: float = DEFAULT_BUDGET_MS):
        if not 0 < threshold < 1:
            raise InvalidThreshold(f"threshold must be in (0, 1), got {threshold}")
        if not budget_ms > 0:
            raise InvalidBudget(f"budget must be positive, got {budget_ms}")
        self.template = template
        self.threshold = threshold
        self.budget_ms = budget_ms
        self.window: deque[IntervalScore] = deque(maxlen=WINDOW)
        self.consumed_ms = 0.0
        self.state = State.PENDING
        self.reason = ""

    @property
    def claimed_id(self) -> str:
        return self.template.subject_id

    @property
    def terminal(self) -> bool:
        return self.state is not State.PENDING

    def feed(self, probe: FeatureVector, t_signal_ms: float) -> IntervalScore | None:
        """Score one probe interval. Returns None when the probe timed out."""
        if self.terminal:
            raise SessionTerminal(f"session already {self.state.name.lower()}")
        if probe.fingerprint != self.template.features.fingerprint:
            raise FingerprintMismatch(
                f"{probe.fingerprint} vs {self.template.features.fingerprint}"
            )
        if t_signal_ms < self.consumed_ms:
            raise ValueError(f"signal time went backwards: {t_signal_ms} < {self.consumed_ms}")
        self.consumed_ms = t_signal_ms
        if t_signal_ms > self.budget_ms:
            self.state = State.REJECTED
            self.reason = "timeout"
            return None
        score = score_interval(self.template.features, probe, self.threshold, t_signal_ms)
        self.window.append(score)
        if len(self.window) == WINDOW and all(s.passed for s in self.window):
            self.state = State.ACCEPTED
            self.reason = "accepted"
        return score

    def close(self) -> None:
        """End of input: a session still pending is rejected as exhausted."""
        if not self.terminal:
            self.state = State.REJECTED
            self.reason = "exhausted"


@dataclass
class AuthDecision:
    state: State
    reason: str
    scores: list[IntervalScore] = field(default_factory=list)
    elapsed_signal_ms: float = 0.0

    @property
    def accepted(self) -> bool:
        return self.state is State.ACCEPTED

    @property
    def accepting_mean(self) -> float:
        tail = self.scores[-WINDOW:]
        return sum(s.cf for s in tail) / len(tail)


def probe_features(record: EcgRecord, m: int = M_COEFFS) -> list[tuple[FeatureVector, int]]:
    """Features and feed times for every interval after the first one.

    The first interval is the one enrollment uses. A record with fewer than
    two R-peaks yields nothing.
    """
    try:
        segments = rr_segments(record)
    except NotEnoughPeaks:
        return []
    out = []
    for seg in segments[1:]:
        try:
            out.append((extract(seg, m), signal_time_ms(seg)))
        except FlatSegment:
            log.debug("skipping flat interval at %d ms", signal_time_ms(seg))
    return out


def _run(probes, template: Template, threshold: float, budget_ms: float) -> AuthDecision:
    session = AuthSession(template, threshold, budget_ms)
    scores = []
    for fv, t in probes:
        score = session.feed(fv, t)
        if score is not None:
            scores.append(score)
        if session.terminal:
            break
    session.close()
    return AuthDecision(session.state, session.reason, scores, session.consumed_ms)


def verify(record: EcgRecord, template: Template, threshold: float = DEFAULT_THRESHOLD,
           budget_ms: float = DEFAULT_BUDGET_MS) -> AuthDecision:
    m = template.features.fingerprint.m_coeffs
    return _run(probe_features(record, m), template, threshold, budget_ms)


def identify(record: EcgRecord, templates, threshold: float = DEFAULT_THRESHOLD,
             budget_ms: float = DEFAULT_BUDGET_MS) -> tuple[str, AuthDecision] | None:
    """One-to-many search. Among accepting templates the highest mean cf over
    the accepting triple wins; ties go to the smallest subject id."""
    templates = list(templates)
    if not templates:
        raise EmptyTemplateSet("no templates to search")
    fp = templates[0].features.fingerprint
    if any(t.features.fingerprint != fp for t in templates):
        raise FingerprintMismatch("templates were built by different pipelines")
    # every template sees the same probes; extract them once
    probes = probe_features(record, fp.m_coeffs)
    best = None
    for t in sorted(templates, key=lambda t: t.subject_id):
        d = _run(probes, t, threshold, budget_ms)
        if d.accepted and (best is None or d.accepting_mean > best[1].accepting_mean):
            best = (t.subject_id, d)
    return best
