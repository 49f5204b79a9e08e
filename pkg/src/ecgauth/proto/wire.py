"""Binary framing between sensor node and verification server.

Frame layout, all integers big-endian::

    "ECGA" | version u8 | msg_type u8 | payload_len u32 | payload | crc32(payload) u32

Field encodings inside payloads: string = u16 byte length + UTF-8;
real array = u32 count + count * f64; fingerprint = n u32, m u32, version u16.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from typing import ClassVar, Union

from ..errors import (
    BadMagic,
    BadVersion,
    CrcMismatch,
    MalformedPayload,
    NeedMoreData,
    PayloadTooLarge,
    UnknownType,
)
from ..features import PipelineFingerprint

MAGIC = b"ECGA"
VERSION = 0x01
MAX_PAYLOAD = 1 << 20

_HEADER = struct.Struct(">4sBBI")
HEADER_SIZE = _HEADER.size
CRC_SIZE = 4

# Error codes
E_MALFORMED = 1
E_DUPLICATE = 2
E_UNKNOWN_SUBJECT = 3
E_FINGERPRINT = 4
E_TERMINAL = 5
E_INTERNAL = 6

ERROR_TEXT = {
    E_MALFORMED: "malformed message",
    E_DUPLICATE: "duplicate subject",
    E_UNKNOWN_SUBJECT: "unknown subject",
    E_FINGERPRINT: "fingerprint mismatch",
    E_TERMINAL: "session terminal",
    E_INTERNAL: "internal error",
}


@dataclass(frozen=True)
class EnrollReq:
    TYPE: ClassVar[int] = 0x01
    subject: str
    fingerprint: PipelineFingerprint
    coeffs: tuple[float, ...]


@dataclass(frozen=True)
class EnrollOk:
    TYPE: ClassVar[int] = 0x02


@dataclass(frozen=True)
class AuthBegin:
    TYPE: ClassVar[int] = 0x03
    subject: str
    fingerprint: PipelineFingerprint


@dataclass(frozen=True)
class SessionOk:
    TYPE: ClassVar[int] = 0x04
    session_nonce: int


@dataclass(frozen=True)
class Feature:
    TYPE: ClassVar[int] = 0x05
    t_signal_ms: int
    coeffs: tuple[float, ...]


@dataclass(frozen=True)
class AuthStatus:
    TYPE: ClassVar[int] = 0x06
    state: int  # 0 pending, 1 accepted, 2 rejected
    cf: float | None
    window_fill: int


@dataclass(frozen=True)
class IdentBegin:
    TYPE: ClassVar[int] = 0x07
    fingerprint: PipelineFingerprint


@dataclass(frozen=True)
class IdentResult:
    TYPE: ClassVar[int] = 0x08
    subject: str | None


@dataclass(frozen=True)
class Error:
    TYPE: ClassVar[int] = 0x7F
    code: int
    message: str


Message = Union[EnrollReq, EnrollOk, AuthBegin, SessionOk, Feature, AuthStatus,
                IdentBegin, IdentResult, Error]


# --- payload fields --------------------------------------------------------


def _string(s: str) -> bytes:
    b = s.encode("utf-8")
    if len(b) > 0xFFFF:
        raise ValueError("string longer than 65535 bytes")
    return struct.pack(">H", len(b)) + b


def _reals(values) -> bytes:
    values = tuple(values)
    return struct.pack(f">I{len(values)}d", len(values), *values)


def _fingerprint(fp: PipelineFingerprint) -> bytes:
    return struct.pack(">IIH", fp.n_resample, fp.m_coeffs, fp.pipeline_version)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise MalformedPayload("payload ends inside a field")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        s = struct.Struct(fmt)
        return s.unpack(self.take(s.size))

    def u8(self) -> int:
        return self.unpack(">B")[0]

    def string(self) -> str:
        (n,) = self.unpack(">H")
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError:
            raise MalformedPayload("string is not valid UTF-8") from None

    def reals(self) -> tuple[float, ...]:
        (n,) = self.unpack(">I")
        if n * 8 > len(self.data) - self.pos:
            raise MalformedPayload("real array count exceeds payload")
        return self.unpack(f">{n}d")

    def fingerprint(self) -> PipelineFingerprint:
        return PipelineFingerprint(*self.unpack(">IIH"))

    def flag(self) -> bool:
        v = self.u8()
        if v not in (0, 1):
            raise MalformedPayload(f"flag byte must be 0 or 1, got {v}")
        return bool(v)

    def done(self) -> None:
        if self.pos != len(self.data):
            raise MalformedPayload(f"{len(self.data) - self.pos} trailing payload bytes")


def encode_payload(msg: Message) -> bytes:
    if isinstance(msg, EnrollReq):
        return _string(msg.subject) + _fingerprint(msg.fingerprint) + _reals(msg.coeffs)
    if isinstance(msg, (EnrollOk,)):
        return b""
    if isinstance(msg, AuthBegin):
        return _string(msg.subject) + _fingerprint(msg.fingerprint)
    if isinstance(msg, SessionOk):
        return struct.pack(">I", msg.session_nonce)
    if isinstance(msg, Feature):
        return struct.pack(">I", msg.t_signal_ms) + _reals(msg.coeffs)
    if isinstance(msg, AuthStatus):
        if msg.state not in (0, 1, 2):
            raise ValueError(f"bad session state {msg.state}")
        head = struct.pack(">BB", msg.state, msg.cf is not None)
        cf = struct.pack(">d", msg.cf) if msg.cf is not None else b""
        return head + cf + struct.pack(">B", msg.window_fill)
    if isinstance(msg, IdentBegin):
        return _fingerprint(msg.fingerprint)
    if isinstance(msg, IdentResult):
        if msg.subject is None:
            return b"\x00"
        return b"\x01" + _string(msg.subject)
    if isinstance(msg, Error):
        return struct.pack(">H", msg.code) + _string(msg.message)
    raise TypeError(f"not a protocol message: {msg!r}")


def decode_payload(msg_type: int, payload: bytes) -> Message:
    r = _Reader(payload)
    if msg_type == EnrollReq.TYPE:
        msg = EnrollReq(r.string(), r.fingerprint(), r.reals())
    elif msg_type == EnrollOk.TYPE:
        msg = EnrollOk()
    elif msg_type == AuthBegin.TYPE:
        msg = AuthBegin(r.string(), r.fingerprint())
    elif msg_type == SessionOk.TYPE:
        msg = SessionOk(*r.unpack(">I"))
    elif msg_type == Feature.TYPE:
        (t,) = r.unpack(">I")
        msg = Feature(t, r.reals())
    elif msg_type == AuthStatus.TYPE:
        state = r.u8()
        if state not in (0, 1, 2):
            raise MalformedPayload(f"bad session state {state}")
        cf = r.unpack(">d")[0] if r.flag() else None
        msg = AuthStatus(state, cf, r.u8())
    elif msg_type == IdentBegin.TYPE:
        msg = IdentBegin(r.fingerprint())
    elif msg_type == IdentResult.TYPE:
        msg = IdentResult(r.string() if r.flag() else None)
    elif msg_type == Error.TYPE:
        (code,) = r.unpack(">H")
        msg = Error(code, r.string())
    else:
        raise UnknownType(f"unknown message type 0x{msg_type:02x}")
    r.done()
    return msg


# --- frames ----------------------------------------------------------------


def encode(msg: Message) -> bytes:
    payload = encode_payload(msg)
    if len(payload) > MAX_PAYLOAD:
        raise PayloadTooLarge(f"payload of {len(payload)} bytes exceeds {MAX_PAYLOAD}")
    header = _HEADER.pack(MAGIC, VERSION, msg.TYPE, len(payload))
    return header + payload + struct.pack(">I", zlib.crc32(payload))


def decode(buf) -> tuple[Message, int]:
    """Decode the frame at the start of `buf`; returns the message and bytes used.

    Raises NeedMoreData when `buf` holds only part of a frame. Garbage is
    reported as soon as it is visible, even in a partial header.
    """
    buf = bytes(buf)
    head = buf[:4]
    if head != MAGIC[: len(head)]:
        raise BadMagic(f"bad magic {head.hex()}")
    if len(buf) < HEADER_SIZE:
        if len(buf) > 4 and buf[4] != VERSION:
            raise BadVersion(f"unsupported version {buf[4]}")
        raise NeedMoreData(HEADER_SIZE - len(buf))
    _, version, msg_type, length = _HEADER.unpack_from(buf)
    if version != VERSION:
        raise BadVersion(f"unsupported version {version}")
    if length > MAX_PAYLOAD:
        raise MalformedPayload(f"declared payload length {length} exceeds {MAX_PAYLOAD}")
    total = HEADER_SIZE + length + CRC_SIZE
    if len(buf) < total:
        raise NeedMoreData(total - len(buf))
    payload = buf[HEADER_SIZE : HEADER_SIZE + length]
    (crc,) = struct.unpack_from(">I", buf, HEADER_SIZE + length)
    if crc != zlib.crc32(payload):
        raise CrcMismatch(f"crc {crc:08x} != {zlib.crc32(payload):08x}")
    return decode_payload(msg_type, payload), total


class FrameDecoder:
    """Incremental decoder for a byte stream arriving in arbitrary chunks."""

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[Message]:
        self._buf += data
        out = []
        while self._buf:
            try:
                msg, used = decode(self._buf)
            except NeedMoreData:
                break
            del self._buf[:used]
            out.append(msg)
        return out

    @property
    def pending(self) -> int:
        return len(self._buf)
