"""Time-ordered detector clicks and their on-disk formats.

Channels: 0 = A+, 1 = A-, 2 = B+, 3 = B-. Timestamps are unsigned ticks
(picoseconds at the default 10^12 ticks per second).

Binary layout, little-endian, no padding::

    b"TTAG" | version u8 = 1 | ticks_per_second u64 | duration_ticks u64
    then per event: channel u8 | t u64

CSV layout: an optional first line ``# ticks_per_second=...,duration_ticks=...``
followed by the header ``channel,t_ps`` and one event per line.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from biphoton.errors import TagFormatError

CHANNEL_NAMES = ("A+", "A-", "B+", "B-")
ALICE = (0, 1)
BOB = (2, 3)
TICKS_PER_SECOND = 10**12

MAGIC = b"TTAG"
VERSION = 1
_HEADER = struct.Struct("<4sBQQ")
RECORD_DTYPE = np.dtype([("channel", "u1"), ("t", "<u8")])


class TagEvent(NamedTuple):
    channel: int
    t: int


@dataclass(eq=False)
class TagStream:
    """Header plus parallel ``channels``/``times`` arrays sorted by time."""

    duration_ticks: int
    channels: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.uint8))
    times: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.uint64))
    ticks_per_second: int = TICKS_PER_SECOND

    def __post_init__(self):
        self.channels = np.ascontiguousarray(self.channels, dtype=np.uint8)
        self.times = np.ascontiguousarray(self.times, dtype=np.uint64)
        self.duration_ticks = int(self.duration_ticks)
        self.ticks_per_second = int(self.ticks_per_second)
        validate(self)

    def __len__(self) -> int:
        return int(self.times.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TagStream):
            return NotImplemented
        return (
            self.duration_ticks == other.duration_ticks
            and self.ticks_per_second == other.ticks_per_second
            and np.array_equal(self.channels, other.channels)
            and np.array_equal(self.times, other.times)
        )

    @property
    def duration(self) -> float:
        """Acquisition time in seconds."""
        return self.duration_ticks / self.ticks_per_second

    def events(self):
        return [TagEvent(int(c), int(t)) for c, t in zip(self.channels, self.times)]

    def counts(self) -> tuple:
        return tuple(int(n) for n in np.bincount(self.channels, minlength=4)[:4])

    @classmethod
    def from_events(cls, events, duration_ticks: int, ticks_per_second: int = TICKS_PER_SECOND):
        events = list(events)
        ch = np.array([e[0] for e in events], dtype=np.uint8)
        t = np.array([e[1] for e in events], dtype=np.uint64)
        return cls(duration_ticks, ch, t, ticks_per_second)


def validate(stream: TagStream) -> None:
    if stream.ticks_per_second <= 0:
        raise TagFormatError("ticks_per_second must be positive")
    if stream.duration_ticks <= 0:
        raise TagFormatError("duration must be positive")
    if stream.channels.shape != stream.times.shape or stream.times.ndim != 1:
        raise TagFormatError("channels and times must be 1-D arrays of equal length")
    if stream.channels.size and int(stream.channels.max()) > 3:
        raise TagFormatError("channel numbers must be 0-3")
    if stream.times.size:
        if np.any(stream.times[1:] < stream.times[:-1]):
            bad = int(np.flatnonzero(stream.times[1:] < stream.times[:-1])[0]) + 1
            raise TagFormatError(f"timestamps decrease at record {bad}")
        if int(stream.times[-1]) >= stream.duration_ticks:
            raise TagFormatError("timestamp at or beyond the stream duration")


def write_tags(stream: TagStream, path, format: str = "binary") -> None:
    """Write ``stream`` as ``binary`` (TTAG) or ``csv``."""
    path = Path(path)
    if format == "binary":
        records = np.empty(len(stream), dtype=RECORD_DTYPE)
        records["channel"] = stream.channels
        records["t"] = stream.times
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, stream.ticks_per_second, stream.duration_ticks))
            fh.write(records.tobytes())
    elif format == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(
                f"# ticks_per_second={stream.ticks_per_second},duration_ticks={stream.duration_ticks}\n"
            )
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("channel", "t_ps"))
            writer.writerows(zip(stream.channels.tolist(), stream.times.tolist()))
    else:
        raise ValueError(f"unknown tag format {format!r}; use binary or csv")


def read_tags(path) -> TagStream:
    """Read a binary or CSV tag file (detected from the magic bytes)."""
    data = Path(path).read_bytes()
    if data[:4] == MAGIC:
        return _read_binary(data)
    try:
        text = data.decode("utf-8", errors="strict")
    except UnicodeDecodeError:
        raise TagFormatError("bad magic bytes and not a UTF-8 CSV file") from None
    return _read_csv(text)


def _read_binary(data: bytes) -> TagStream:
    if len(data) < _HEADER.size:
        raise TagFormatError("file shorter than the TTAG header")
    magic, version, tps, duration = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise TagFormatError("bad magic bytes")
    if version != VERSION:
        raise TagFormatError(f"unsupported tag format version {version}")
    body = memoryview(data)[_HEADER.size:]
    if len(body) % RECORD_DTYPE.itemsize:
        raise TagFormatError(
            f"truncated record: {len(body) % RECORD_DTYPE.itemsize} trailing bytes"
        )
    records = np.frombuffer(body, dtype=RECORD_DTYPE)
    return TagStream(duration, records["channel"].copy(), records["t"].copy(), tps)


def _read_csv(text: str) -> TagStream:
    lines = text.splitlines()
    tps, duration = TICKS_PER_SECOND, None
    if lines and lines[0].startswith("#"):
        for item in lines[0].lstrip("#").split(","):
            key, _, value = item.strip().partition("=")
            try:
                if key == "ticks_per_second":
                    tps = int(value)
                elif key == "duration_ticks":
                    duration = int(value)
            except ValueError:
                raise TagFormatError(f"bad metadata value {item!r}") from None
        lines = lines[1:]
    rows = list(csv.reader(io.StringIO("\n".join(lines))))
    if not rows or [c.strip() for c in rows[0]] != ["channel", "t_ps"]:
        raise TagFormatError("CSV tag file must start with the header channel,t_ps")
    ch, t = [], []
    for n, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise TagFormatError(f"line {n}: expected 2 columns")
        try:
            ch.append(int(row[0]))
            t.append(int(row[1]))
        except ValueError:
            raise TagFormatError(f"line {n}: non-integer field") from None
        if t[-1] < 0 or not 0 <= ch[-1] <= 3:
            raise TagFormatError(f"line {n}: channel must be 0-3 and time non-negative")
    if duration is None:
        duration = (max(t) + 1) if t else 1
    return TagStream(duration, np.array(ch, dtype=np.int64), np.array(t, dtype=np.int64), tps)
