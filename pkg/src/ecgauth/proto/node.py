"""Sensor-node client: runs the front end locally and ships features to the server."""

from __future__ import annotations

import socket
from collections import deque
from dataclasses import dataclass, field

from ..authflow import State, enroll, probe_features
from ..errors import ConnectionFailed, ProtocolError
from ..features import M_COEFFS, PipelineFingerprint
from ..ingest import EcgRecord
from . import wire
from .server import parse_address

DEFAULT_TIMEOUT_S = 30.0


@dataclass
class NodeOutcome:
    """What the node learned from the server.

    `state` is one of "enrolled", "accepted", "rejected" or "error".
    """

    state: str
    error_code: int | None = None
    message: str = ""
    statuses: list[wire.AuthStatus] = field(default_factory=list)
    subject: str | None = None

    @property
    def cfs(self) -> list[float]:
        return [s.cf for s in self.statuses if s.cf is not None]


class _Channel:
    def __init__(self, address: str, timeout: float):
        host, port = parse_address(address)
        try:
            self.sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise ConnectionFailed(f"cannot connect to {address}: {exc}") from exc
        self.decoder = wire.FrameDecoder()
        self.inbox: deque = deque()

    def send(self, msg) -> None:
        try:
            self.sock.sendall(wire.encode(msg))
        except OSError as exc:
            raise ConnectionFailed(f"send failed: {exc}") from exc

    def recv(self):
        while not self.inbox:
            try:
                data = self.sock.recv(65536)
            except OSError as exc:
                raise ConnectionFailed(f"receive failed: {exc}") from exc
            if not data:
                raise ConnectionFailed("server closed the connection")
            self.inbox.extend(self.decoder.feed(data))
        return self.inbox.popleft()

    def close(self) -> None:
        self.sock.close()


def _error(msg: wire.Error, **kw) -> NodeOutcome:
    return NodeOutcome("error", msg.code, msg.message, **kw)


def node_run(record: EcgRecord, server_address: str, subject_id: str, mode: str,
             m: int = M_COEFFS, timeout: float = DEFAULT_TIMEOUT_S) -> NodeOutcome:
    """Enroll from the first RR interval, or authenticate with the ones after it."""
    if mode not in ("enroll", "auth"):
        raise ValueError(f"mode must be 'enroll' or 'auth', got {mode!r}")
    if mode == "enroll":
        template = enroll(record, subject_id, m)
        probes = []
    else:
        probes = probe_features(record, m)

    ch = _Channel(server_address, timeout)
    try:
        if mode == "enroll":
            fv = template.features
            ch.send(wire.EnrollReq(subject_id, fv.fingerprint, tuple(fv.coeffs.tolist())))
            reply = ch.recv()
            if isinstance(reply, wire.EnrollOk):
                return NodeOutcome("enrolled", subject=subject_id)
            if isinstance(reply, wire.Error):
                return _error(reply)
            raise ProtocolError(f"expected EnrollOk, got {type(reply).__name__}")

        fingerprint = PipelineFingerprint(m_coeffs=m)
        ch.send(wire.AuthBegin(subject_id, fingerprint))
        reply = ch.recv()
        if isinstance(reply, wire.Error):
            return _error(reply)
        if not isinstance(reply, wire.SessionOk):
            raise ProtocolError(f"expected SessionOk, got {type(reply).__name__}")

        statuses = []
        for fv, t in probes:
            ch.send(wire.Feature(t, tuple(fv.coeffs.tolist())))
            reply = ch.recv()
            if isinstance(reply, wire.Error):
                return _error(reply, statuses=statuses)
            if not isinstance(reply, wire.AuthStatus):
                raise ProtocolError(f"expected AuthStatus, got {type(reply).__name__}")
            statuses.append(reply)
            if reply.state == State.ACCEPTED:
                return NodeOutcome("accepted", statuses=statuses, subject=subject_id)
            if reply.state == State.REJECTED:
                return NodeOutcome("rejected", message="timeout", statuses=statuses)
        # ran out of signal before the server decided
        return NodeOutcome("rejected", message="exhausted", statuses=statuses)
    finally:
        ch.close()
