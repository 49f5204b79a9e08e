"""JSON-lines template database.

One template per line::

    {"v": 1, "subject": "alice", "fingerprint": {"n": 256, "m": 64, "pv": 1},
     "coeffs": [...], "enrolled_at": 1700000000, "source": "100"}

Floats are written with Python's shortest round-trip repr, so a reload
reproduces every coefficient exactly. Saves go through a temp file and
``os.replace``; an interrupted save leaves the previous file untouched.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from pathlib import Path

from .authflow import Template
from .errors import CorruptStore, DuplicateSubject
from .features import FeatureVector, PipelineFingerprint

FORMAT_VERSION = 1


def template_to_json(t: Template) -> str:
    fp = t.features.fingerprint
    return json.dumps(
        {
            "v": FORMAT_VERSION,
            "subject": t.subject_id,
            "fingerprint": {"n": fp.n_resample, "m": fp.m_coeffs, "pv": fp.pipeline_version},
            "coeffs": t.features.coeffs.tolist(),
            "enrolled_at": t.enrolled_at,
            "source": t.source_record,
        },
        ensure_ascii=False,
        allow_nan=False,
    )


def template_from_json(line: str) -> Template:
    obj = json.loads(line)
    if not isinstance(obj, dict) or obj.get("v") != FORMAT_VERSION:
        raise ValueError("not a version-1 template record")
    fp = obj["fingerprint"]
    fingerprint = PipelineFingerprint(int(fp["n"]), int(fp["m"]), int(fp["pv"]))
    coeffs = obj["coeffs"]
    if not isinstance(coeffs, list) or not all(
        isinstance(c, (int, float)) and not isinstance(c, bool) for c in coeffs
    ):
        raise ValueError("coeffs must be a list of numbers")
    subject = obj["subject"]
    if not isinstance(subject, str):
        raise ValueError("subject must be a string")
    return Template(
        subject_id=subject,
        features=FeatureVector(coeffs, fingerprint),
        enrolled_at=int(obj["enrolled_at"]),
        source_record=str(obj["source"]),
    )


class TemplateStore:
    """Enrolled templates keyed by subject id, persisted on every change.

    Mutations are serialised by a lock; reads never block.
    """

    def __init__(self, path, templates=None, before_replace=None):
        self.path = Path(path)
        self._templates: dict[str, Template] = dict(templates or {})
        self._lock = threading.Lock()
        # test hook, called with the temp path just before the rename
        self._before_replace = before_replace

    @classmethod
    def open(cls, path, **kwargs) -> "TemplateStore":
        path = Path(path)
        templates: dict[str, Template] = {}
        if path.exists():
            with open(path, encoding="utf-8", newline="") as fh:
                for lineno, line in enumerate(fh, 1):
                    if not line.strip():
                        continue
                    try:
                        t = template_from_json(line)
                    except (ValueError, KeyError, TypeError) as exc:
                        raise CorruptStore(lineno, str(exc)) from None
                    if t.subject_id in templates:
                        raise CorruptStore(lineno, f"duplicate subject {t.subject_id!r}")
                    templates[t.subject_id] = t
        return cls(path, templates, **kwargs)

    def _save(self, templates: dict[str, Template]) -> None:
        directory = self.path.parent
        directory.mkdir(parents=True, exist_ok=True)
        body = "".join(template_to_json(templates[k]) + "\n" for k in sorted(templates))
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{self.path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(body)
                fh.flush()
                os.fsync(fh.fileno())
            if self._before_replace is not None:
                self._before_replace(tmp)
            os.replace(tmp, self.path)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise

    def put(self, template: Template, force: bool = False) -> None:
        with self._lock:
            if template.subject_id in self._templates and not force:
                raise DuplicateSubject(template.subject_id)
            updated = dict(self._templates)
            updated[template.subject_id] = template
            self._save(updated)
            self._templates = updated

    def get(self, subject_id: str) -> Template | None:
        return self._templates.get(subject_id)

    def list(self) -> list[str]:
        return sorted(self._templates)

    def templates(self) -> list[Template]:
        snapshot = self._templates
        return [snapshot[k] for k in sorted(snapshot)]

    def __len__(self):
        return len(self._templates)

    def __contains__(self, subject_id):
        return subject_id in self._templates
