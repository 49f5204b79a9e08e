"""Loading ECG signals from CSV sample files and MIT-BIH (WFDB format 212) records."""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyInput, MalformedHeader, ParseError, TruncatedInput, UnsupportedFormat


class Source(str, enum.Enum):
    CSV = "csv"
    WFDB212 = "wfdb212"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True, eq=False)
class EcgRecord:
    """A single-channel ECG signal in millivolts."""

    record_id: str
    fs_hz: float
    samples: np.ndarray
    source: Source = Source.SYNTHETIC
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        fs = float(self.fs_hz)
        if not fs > 0 or not math.isfinite(fs):
            raise ValueError(f"sampling rate must be positive, got {self.fs_hz!r}")
        x = np.array(self.samples, dtype=np.float64).ravel()
        if x.size < 1:
            raise EmptyInput("an ECG record needs at least one sample")
        if not np.all(np.isfinite(x)):
            raise ValueError("ECG samples must be finite")
        x.flags.writeable = False
        object.__setattr__(self, "fs_hz", fs)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "source", Source(self.source))

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.fs_hz

    def with_samples(self, samples) -> "EcgRecord":
        return EcgRecord(self.record_id, self.fs_hz, samples, self.source, dict(self.meta))

    def head(self, seconds: float) -> "EcgRecord":
        """The first `seconds` of the record (or all of it if shorter)."""
        n = max(1, int(round(seconds * self.fs_hz)))
        return self.with_samples(self.samples[:n])


# --- format 212 ------------------------------------------------------------


def decode_212(data: bytes, n_samples: int) -> np.ndarray:
    """Unpack `n_samples` 12-bit two's complement values from format-212 bytes.

    Each byte triple (b0, b1, b2) holds two samples: the first is the low
    nibble of b1 followed by b0, the second the high nibble of b1 followed
    by b2.
    """
    if n_samples < 0:
        raise ValueError("n_samples must be non-negative")
    need = (n_samples * 3 + 1) // 2
    if len(data) < need:
        raise TruncatedInput(f"format 212: {n_samples} samples need {need} bytes, got {len(data)}")
    if n_samples == 0:
        return np.zeros(0, dtype=np.int16)
    n_triples = (n_samples + 1) // 2
    raw = np.frombuffer(bytes(data[:need]) + b"\x00" * (n_triples * 3 - need), dtype=np.uint8)
    b = raw.reshape(-1, 3).astype(np.int32)
    out = np.empty((n_triples, 2), dtype=np.int32)
    out[:, 0] = ((b[:, 1] & 0x0F) << 8) | b[:, 0]
    out[:, 1] = ((b[:, 1] & 0xF0) << 4) | b[:, 2]
    out[out > 2047] -= 4096
    return out.ravel()[:n_samples].astype(np.int16)


def encode_212(values) -> bytes:
    """Pack 12-bit signed integers into format-212 bytes (inverse of decode_212)."""
    v = np.asarray(values, dtype=np.int64).ravel()
    if v.size and (v.min() < -2048 or v.max() > 2047):
        raise ValueError("format 212 holds values in [-2048, 2047]")
    n = v.size
    if n % 2:
        v = np.append(v, 0)
    u = (v & 0xFFF).reshape(-1, 2)
    out = np.empty((u.shape[0], 3), dtype=np.uint8)
    out[:, 0] = u[:, 0] & 0xFF
    out[:, 1] = ((u[:, 0] >> 8) & 0x0F) | ((u[:, 1] >> 4) & 0xF0)
    out[:, 2] = u[:, 1] & 0xFF
    return out.tobytes()[: (n * 3 + 1) // 2]


# --- WFDB headers ----------------------------------------------------------

_LEADING_NUMBER = re.compile(r"^[-+]?(\d+(\.\d*)?|\.\d+)([eE][-+]?\d+)?")


def _number(token: str, what: str, lineno: int) -> float:
    m = _LEADING_NUMBER.match(token)
    if not m:
        raise MalformedHeader(f"line {lineno}: bad {what} {token!r}")
    return float(m.group(0))


def _parse_header(text: str):
    lines = [(i, ln.strip()) for i, ln in enumerate(text.splitlines(), 1)]
    lines = [(i, ln) for i, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise MalformedHeader("header has no record line")
    lineno, rec = lines[0]
    parts = rec.split()
    if len(parts) < 4:
        raise MalformedHeader(f"line {lineno}: record line needs name, n_sig, fs and n_samples")
    if "/" in parts[0]:
        raise UnsupportedFormat("multi-segment records are not supported")
    try:
        n_sig = int(parts[1])
        n_samples = int(parts[3])
    except ValueError:
        raise MalformedHeader(f"line {lineno}: n_sig and n_samples must be integers") from None
    fs = _number(parts[2], "sampling frequency", lineno)
    if n_sig < 1 or n_samples < 0 or fs <= 0:
        raise MalformedHeader(f"line {lineno}: implausible record line {rec!r}")
    if len(lines) < 1 + n_sig:
        raise MalformedHeader(f"header declares {n_sig} signals but lists {len(lines) - 1}")

    signals = []
    for lineno, ln in lines[1 : 1 + n_sig]:
        f = ln.split()
        if len(f) < 5:
            raise MalformedHeader(f"line {lineno}: signal line needs at least 5 fields")
        m = re.fullmatch(r"(\d+)(x\d+)?(:\d+)?(\+(\d+))?", f[1])
        if not m:
            raise MalformedHeader(f"line {lineno}: bad format field {f[1]!r}")
        fmt = int(m.group(1))
        offset = int(m.group(5) or 0)
        # gain[(baseline)][/units]
        gm = re.fullmatch(r"([-+0-9.eE]+)(\((-?\d+)\))?(/\S+)?", f[2])
        if not gm:
            raise MalformedHeader(f"line {lineno}: bad gain field {f[2]!r}")
        gain = float(gm.group(1)) or 200.0
        try:
            adc_zero = int(f[4])
        except ValueError:
            raise MalformedHeader(f"line {lineno}: bad baseline field {f[4]!r}") from None
        baseline = int(gm.group(3)) if gm.group(3) is not None else adc_zero
        signals.append(dict(file=f[0], fmt=fmt, offset=offset, gain=gain, baseline=baseline))
    return parts[0], fs, n_samples, signals


def read_wfdb(header_path) -> EcgRecord:
    """Read channel 0 of a format-212 WFDB record, converted to mV."""
    header_path = Path(header_path)
    text = header_path.read_text(encoding="ascii", errors="replace")
    name, fs, n_samples, signals = _parse_header(text)
    ch0 = signals[0]
    if ch0["fmt"] != 212:
        raise UnsupportedFormat(f"format {ch0['fmt']} is not supported (only 212)")
    # channels stored in the same file are interleaved frame by frame
    group = [s for s in signals if s["file"] == ch0["file"]]
    if any(s["fmt"] != 212 for s in group):
        raise UnsupportedFormat("mixed formats within one signal file")
    n_interleaved = len(group)

    data = (header_path.parent / ch0["file"]).read_bytes()[ch0["offset"] :]
    raw = decode_212(data, n_samples * n_interleaved)[::n_interleaved]
    mv = (raw.astype(np.float64) - ch0["baseline"]) / ch0["gain"]
    return EcgRecord(
        record_id=name,
        fs_hz=fs,
        samples=mv,
        source=Source.WFDB212,
        meta={"gain": ch0["gain"], "baseline": ch0["baseline"], "path": str(header_path)},
    )


def write_wfdb(directory, record_id: str, channels, fs_hz: float, gain: float = 200.0,
               baseline: int = 1024) -> Path:
    """Write digital samples (one int array per channel) as a format-212 record.

    Returns the header path. Mostly useful for building test fixtures.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    chans = [np.asarray(c, dtype=np.int64) for c in channels]
    n = chans[0].size
    if any(c.size != n for c in chans):
        raise ValueError("all channels must have the same length")
    frames = np.column_stack(chans).ravel()
    dat = f"{record_id}.dat"
    (directory / dat).write_bytes(encode_212(frames))
    lines = [f"{record_id} {len(chans)} {fs_hz:g} {n}"]
    for i, c in enumerate(chans):
        first = int(c[0]) if n else 0
        lines.append(f"{dat} 212 {gain:g} 11 {baseline} {first} 0 0 ch{i}")
    hea = directory / f"{record_id}.hea"
    hea.write_text("\n".join(lines) + "\n")
    return hea


# --- CSV -------------------------------------------------------------------


def read_csv(path, fs_hz: float) -> EcgRecord:
    """One sample (mV) per line; any columns after the first are ignored."""
    path = Path(path)
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            first = re.split(r"[,;\s]", line, maxsplit=1)[0]
            try:
                v = float(first)
            except ValueError:
                raise ParseError(lineno, f"not a number: {first!r}") from None
            if not math.isfinite(v):
                raise ParseError(lineno, f"non-finite sample {first!r}")
            values.append(v)
    if not values:
        raise EmptyInput(f"{path}: no samples")
    return EcgRecord(path.stem, fs_hz, values, Source.CSV, {"path": str(path)})


def write_csv(record: EcgRecord, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(f"{v!r}\n" for v in record.samples.tolist())


def load_record(path, fs_hz: float = 360.0) -> EcgRecord:
    """Dispatch on extension: `.hea` is WFDB, anything else is CSV at `fs_hz`."""
    path = Path(path)
    if path.suffix.lower() == ".hea":
        return read_wfdb(path)
    if path.suffix == "" and path.with_suffix(".hea").exists():
        return read_wfdb(path.with_suffix(".hea"))
    return read_csv(path, fs_hz)
