"""Offline evaluation: genuine and impostor correlation trials, accuracy, FAR/FRR."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .dsp import rr_segments
from .errors import EmptyInput, FlatSegment, NotEnoughPeaks
from .features import M_COEFFS, FeatureVector, extract
from .ingest import EcgRecord
from .matching import pearson

log = logging.getLogger(__name__)

PROBES_PER_TRIAL = 3
MIN_PEAKS = PROBES_PER_TRIAL + 2


@dataclass(frozen=True)
class TrialResult:
    subject_id: str
    kind: str  # "genuine" or "impostor"
    probe_subject: str
    correlations: tuple[float, float, float]

    def __post_init__(self):
        if len(self.correlations) != PROBES_PER_TRIAL:
            raise ValueError("a trial has exactly three correlations")
        if any(not -1.0 <= c <= 1.0 for c in self.correlations):
            raise ValueError("correlations must lie in [-1, 1]")


class Trials(list):
    """A list of TrialResult that also remembers which records were skipped."""

    def __init__(self, results=(), skipped=()):
        super().__init__(results)
        self.skipped: list[tuple[str, str]] = list(skipped)


def _enrolled_and_probes(record: EcgRecord, m: int):
    """Template features from the first interval, probe features from the next three."""
    try:
        segments = rr_segments(record)
    except NotEnoughPeaks:
        segments = []
    n_peaks = len(segments) + 1 if segments else 0
    if n_peaks < MIN_PEAKS:
        raise NotEnoughPeaks(f"too few beats: {n_peaks} R-peaks, need {MIN_PEAKS}")
    feats = [extract(s, m) for s in segments[: PROBES_PER_TRIAL + 1]]
    return feats[0], feats[1:]


def _cf(template: FeatureVector, probe: FeatureVector) -> float:
    return pearson(template.coeffs[1:], probe.coeffs[1:])


def _prepare(records, m):
    prepared, skipped = [], []
    for r in records:
        try:
            prepared.append((r.record_id, *_enrolled_and_probes(r, m)))
        except (NotEnoughPeaks, FlatSegment) as exc:
            log.warning("skipping %s: %s", r.record_id, exc)
            skipped.append((r.record_id, str(exc)))
    return prepared, skipped


def run_genuine_trials(records, m: int = M_COEFFS) -> Trials:
    prepared, skipped = _prepare(records, m)
    results = [
        TrialResult(rid, "genuine", rid, tuple(_cf(t, p) for p in probes))
        for rid, t, probes in prepared
    ]
    return Trials(results, skipped)


def run_impostor_trials(records, m: int = M_COEFFS) -> Trials:
    """Every ordered pair (A, B), A != B: A's template against B's three probes."""
    prepared, skipped = _prepare(records, m)
    results = []
    for a, t, _ in prepared:
        for b, _, probes in prepared:
            if a != b:
                results.append(TrialResult(a, "impostor", b, tuple(_cf(t, p) for p in probes)))
    return Trials(results, skipped)


def accuracy(results, threshold: float) -> float:
    """Fraction of individual interval correlations strictly above `threshold`."""
    values = [c for r in results for c in r.correlations]
    if not values:
        raise EmptyInput("no correlations to score")
    return sum(c > threshold for c in values) / len(values)


def _accepted(r: TrialResult, threshold: float) -> bool:
    return all(c > threshold for c in r.correlations)


def far_frr(genuine, impostor, threshold: float) -> tuple[float, float]:
    """A trial is accepted when all three of its correlations pass."""
    genuine, impostor = list(genuine), list(impostor)
    if not genuine or not impostor:
        raise EmptyInput("FAR/FRR need both genuine and impostor trials")
    far = sum(_accepted(r, threshold) for r in impostor) / len(impostor)
    frr = sum(not _accepted(r, threshold) for r in genuine) / len(genuine)
    return far, frr


def load_table1() -> Trials:
    """The published per-subject genuine correlations (15 subjects x 3 intervals)."""
    text = resources.files("ecgauth.data").joinpath("table1.csv").read_text(encoding="utf-8")
    rows = csv.DictReader(io.StringIO(text))
    return Trials(
        TrialResult(row["subject"], "genuine", row["subject"],
                    (float(row["cf1"]), float(row["cf2"]), float(row["cf3"])))
        for row in rows
    )


def _fmt_threshold(t: float) -> str:
    return f"{t:.2f}" if round(t, 2) == t else repr(t)


def summary_line(genuine, impostor, threshold: float) -> str:
    genuine = [r for r in genuine if r.kind == "genuine"]
    impostor = [r for r in impostor if r.kind == "impostor"]
    acc = f"{accuracy(genuine, threshold):.4f}" if genuine else "NA"
    if genuine and impostor:
        far, frr = far_frr(genuine, impostor, threshold)
        far_s = f"{far:.4f}"
    else:
        far_s = "NA"
        frr = sum(not _accepted(r, threshold) for r in genuine) / len(genuine) if genuine else None
    frr_s = "NA" if frr is None else f"{frr:.4f}"
    return f"# threshold={_fmt_threshold(threshold)} accuracy={acc} far={far_s} frr={frr_s}"


def render_report(results, thresholds) -> str:
    results = list(results)
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["subject", "kind", "probe", "cf1", "cf2", "cf3"])
    for r in results:
        w.writerow([r.subject_id, r.kind, r.probe_subject, *(f"{c:.6f}" for c in r.correlations)])
    for t in thresholds:
        out.write(summary_line(results, results, t) + "\n")
    return out.getvalue()


def report(results, thresholds, path) -> str:
    """Write the trial CSV plus one summary line per threshold; returns the text."""
    text = render_report(results, thresholds)
    Path(path).write_text(text, encoding="utf-8", newline="\n")
    return text
