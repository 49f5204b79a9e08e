"""Verification server: holds the template store and runs the sessions."""

from __future__ import annotations

import logging
import secrets
import signal
import socketserver
import threading
import time

from ..authflow import DEFAULT_BUDGET_MS, AuthSession, State, Template
from ..errors import DuplicateSubject, FrameError, InvalidBudget, InvalidThreshold, SessionTerminal
from ..features import FeatureVector
from ..matching import DEFAULT_THRESHOLD
from ..store import TemplateStore
from . import wire

log = logging.getLogger(__name__)

RECV_SIZE = 65536


def parse_address(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"expected HOST:PORT, got {text!r}")
    return host or "0.0.0.0", int(port)


class _Connection(socketserver.BaseRequestHandler):
    server: "AuthServer"

    def setup(self):
        self.decoder = wire.FrameDecoder()
        self.sessions: dict[str, AuthSession] = {}
        self.identifying = False
        self.finished = False

    def send(self, msg) -> None:
        self.request.sendall(wire.encode(msg))

    def error(self, code: int, detail: str = "") -> None:
        self.send(wire.Error(code, detail or wire.ERROR_TEXT[code]))

    def handle(self):
        peer = "%s:%s" % self.client_address[:2]
        while True:
            try:
                data = self.request.recv(RECV_SIZE)
            except OSError:
                return
            if not data:
                return
            try:
                messages = self.decoder.feed(data)
            except FrameError as exc:
                log.info("%s: bad frame (%s), closing", peer, exc)
                self.error(wire.E_MALFORMED, str(exc))
                return
            for msg in messages:
                try:
                    self.dispatch(msg, peer)
                except Exception:
                    log.exception("%s: internal error", peer)
                    self.error(wire.E_INTERNAL)

    def dispatch(self, msg, peer: str) -> None:
        if isinstance(msg, wire.EnrollReq):
            self.on_enroll(msg, peer)
        elif isinstance(msg, wire.AuthBegin):
            self.on_auth_begin(msg)
        elif isinstance(msg, wire.IdentBegin):
            self.on_ident_begin(msg)
        elif isinstance(msg, wire.Feature):
            self.on_feature(msg)
        else:
            self.error(wire.E_MALFORMED, f"unexpected {type(msg).__name__}")

    def on_enroll(self, msg: wire.EnrollReq, peer: str) -> None:
        try:
            template = Template(
                subject_id=msg.subject,
                features=FeatureVector(msg.coeffs, msg.fingerprint),
                enrolled_at=int(time.time()),
                source_record=f"node:{peer}",
            )
        except ValueError as exc:
            self.error(wire.E_MALFORMED, str(exc))
            return
        try:
            self.server.store.put(template)
        except DuplicateSubject:
            self.error(wire.E_DUPLICATE)
            return
        self.send(wire.EnrollOk())

    def _begin(self, templates, fingerprint) -> None:
        if any(t.features.fingerprint != fingerprint for t in templates):
            self.error(wire.E_FINGERPRINT)
            return
        self.sessions = {
            t.subject_id: AuthSession(t, self.server.threshold, self.server.budget_ms)
            for t in templates
        }
        self.finished = False
        self.send(wire.SessionOk(secrets.randbits(32)))

    def on_auth_begin(self, msg: wire.AuthBegin) -> None:
        template = self.server.store.get(msg.subject)
        if template is None:
            self.error(wire.E_UNKNOWN_SUBJECT)
            return
        self.identifying = False
        self._begin([template], msg.fingerprint)

    def on_ident_begin(self, msg: wire.IdentBegin) -> None:
        templates = self.server.store.templates()
        if not templates:
            self.error(wire.E_UNKNOWN_SUBJECT, "no enrolled subjects")
            return
        self.identifying = True
        self._begin(templates, msg.fingerprint)

    def on_feature(self, msg: wire.Feature) -> None:
        if not self.sessions:
            self.error(wire.E_MALFORMED, "no session in progress")
            return
        if self.finished:
            self.error(wire.E_TERMINAL)
            return
        fingerprint = next(iter(self.sessions.values())).template.features.fingerprint
        try:
            probe = FeatureVector(msg.coeffs, fingerprint)
        except ValueError as exc:
            self.error(wire.E_FINGERPRINT, str(exc))
            return
        scored = []
        for session in self.sessions.values():
            if session.terminal:
                continue
            try:
                score = session.feed(probe, msg.t_signal_ms)
            except SessionTerminal:
                continue
            except ValueError as exc:
                self.error(wire.E_MALFORMED, str(exc))
                return
            if score is not None:
                scored.append(score.cf)

        states = [s.state for s in self.sessions.values()]
        fill = max(len(s.window) for s in self.sessions.values())
        cf = max(scored) if scored else None
        if not self.identifying:
            state = states[0]
        elif all(s is not State.PENDING for s in states):
            state = State.ACCEPTED if State.ACCEPTED in states else State.REJECTED
        else:
            state = State.PENDING
        self.send(wire.AuthStatus(int(state), cf, fill))
        if state is State.PENDING:
            return
        self.finished = True
        if self.identifying:
            self.send(wire.IdentResult(self._best_subject()))

    def _best_subject(self) -> str | None:
        best = None
        for sid in sorted(self.sessions):
            s = self.sessions[sid]
            if s.state is State.ACCEPTED:
                mean = sum(x.cf for x in s.window) / len(s.window)
                if best is None or mean > best[1]:
                    best = (sid, mean)
        return best[0] if best else None


class AuthServer(socketserver.ThreadingTCPServer):
    """One thread per connection, one session per connection."""

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address, store: TemplateStore, threshold: float = DEFAULT_THRESHOLD,
                 budget_ms: float = DEFAULT_BUDGET_MS):
        if not 0 < threshold < 1:
            raise InvalidThreshold(f"threshold must be in (0, 1), got {threshold}")
        if not budget_ms > 0:
            raise InvalidBudget(f"budget must be positive, got {budget_ms}")
        self.store = store
        self.threshold = threshold
        self.budget_ms = budget_ms
        super().__init__(address, _Connection)

    @property
    def address(self) -> tuple[str, int]:
        return self.server_address[:2]

    def start_background(self) -> threading.Thread:
        t = threading.Thread(target=self.serve_forever, name="ecgauth-server", daemon=True)
        t.start()
        return t


def serve(listen: str, store: TemplateStore, threshold: float = DEFAULT_THRESHOLD,
          budget_ms: float = DEFAULT_BUDGET_MS) -> None:
    """Run until SIGINT or SIGTERM."""
    server = AuthServer(parse_address(listen), store, threshold, budget_ms)
    host, port = server.address
    log.info("listening on %s:%d with %d templates", host, port, len(store))

    def stop(signum, frame):
        threading.Thread(target=server.shutdown, daemon=True).start()

    if threading.current_thread() is threading.main_thread():
        signal.signal(signal.SIGTERM, stop)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
