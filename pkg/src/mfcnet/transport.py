"""Wire format and transports.

The codec is a fixed 16-byte little-endian header plus up to eight float64
payload samples:

    offset 0  u16  magic 0x4D46 ("MF" on the wire: 0x46 0x4D)
    offset 2  u8   version (currently 1)
    offset 3  u8   kind: 0 measurement, 1 control, 2 reference
    offset 4  u32  seq, strictly increasing per (sender, kind) stream
    offset 8  u64  timestamp in microseconds since run start
    offset 16 f64[n] payload

The sample count is carried by the frame length (length = 16 + 8*n), not
by a header field. Receivers keep only datagrams whose seq exceeds the
last accepted one on that stream — late, duplicate, and reordered frames
are dropped, which is the whole loss-handling strategy: the newest state
always wins.

Packet loss is *injected at the sender*, before the socket, from seeded
per-direction RNG streams, so configured drop rates hold exactly whatever
the OS does; cut windows drop by timestamp without consuming RNG draws.
"""

from __future__ import annotations

import socket
import struct
import threading
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import ConfigError, EncodingError, FramingError, ProtocolError

MAGIC = 0x4D46
VERSION = 1
HEADER = struct.Struct("<HBBIQ")
HEADER_LEN = HEADER.size  # 16
MAX_PAYLOAD = 8


class DatagramKind(IntEnum):
    MEASUREMENT = 0
    CONTROL = 1
    REFERENCE = 2


class Direction(IntEnum):
    PLANT_TO_SERVER = 0
    SERVER_TO_PLANT = 1


@dataclass(frozen=True)
class Datagram:
    kind: DatagramKind
    seq: int
    timestamp_us: int
    payload: tuple[float, ...]

    @property
    def count(self) -> int:
        return len(self.payload)


def encode(d: Datagram) -> bytes:
    if len(d.payload) > MAX_PAYLOAD:
        raise EncodingError(f"payload of {len(d.payload)} samples exceeds max {MAX_PAYLOAD}")
    if not 0 <= d.seq < 2**32:
        raise EncodingError(f"seq {d.seq} outside u32")
    if not 0 <= d.timestamp_us < 2**64:
        raise EncodingError(f"timestamp {d.timestamp_us} outside u64")
    head = HEADER.pack(MAGIC, VERSION, int(d.kind), d.seq, d.timestamp_us)
    return head + struct.pack(f"<{len(d.payload)}d", *d.payload)


def decode(frame: bytes) -> Datagram:
    if len(frame) < HEADER_LEN:
        raise FramingError(f"frame of {len(frame)} bytes shorter than the {HEADER_LEN}-byte header")
    body = len(frame) - HEADER_LEN
    if body % 8 != 0:
        raise FramingError(f"payload of {body} bytes is not a whole number of float64 samples")
    count = body // 8
    if count > MAX_PAYLOAD:
        raise FramingError(f"{count} payload samples exceed max {MAX_PAYLOAD}")
    magic, version, kind, seq, ts = HEADER.unpack_from(frame)
    if magic != MAGIC:
        raise ProtocolError(f"bad magic 0x{magic:04X}")
    if version != VERSION:
        raise ProtocolError(f"unsupported version {version}")
    try:
        kind = DatagramKind(kind)
    except ValueError:
        raise ProtocolError(f"unknown datagram kind {kind}") from None
    payload = struct.unpack_from(f"<{count}d", frame, HEADER_LEN)
    return Datagram(kind=kind, seq=seq, timestamp_us=ts, payload=payload)


# --------------------------------------------------------------- accepting


@dataclass
class StreamState:
    """Per-kind last-accepted seq, enforcing newest-wins."""

    last_seq: dict[DatagramKind, int] = field(default_factory=dict)
    accepted: int = 0
    rejected_stale: int = 0

    def accept(self, d: Datagram) -> bool:
        last = self.last_seq.get(d.kind)
        if last is not None and d.seq <= last:
            self.rejected_stale += 1
            return False
        self.last_seq[d.kind] = d.seq
        self.accepted += 1
        return True


# ------------------------------------------------------------ loss model


@dataclass(frozen=True)
class LossModel:
    """Per-direction Bernoulli drop rates plus deterministic cut windows.

    ``split_total``: when true, the configured rates are read as run
    totals spread evenly over both directions (each direction drops at
    rate/2) instead of the default per-direction reading.
    """

    p_fault1: float = 0.0  # measurement direction
    p_fault2: float = 0.0  # control direction
    cut_windows: tuple[tuple[Direction, float, float], ...] = ()
    seed: int = 0
    split_total: bool = False

    def __post_init__(self):
        for name, p in (("p_fault1", self.p_fault1), ("p_fault2", self.p_fault2)):
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name}={p} outside [0, 1]")
        for direction, t0, t1 in self.cut_windows:
            if t0 < 0 or t1 < t0:
                raise ConfigError(f"bad cut window [{t0}, {t1}) for {Direction(direction).name}")

    def rate(self, direction: Direction) -> float:
        p = self.p_fault1 if direction == Direction.PLANT_TO_SERVER else self.p_fault2
        return p / 2.0 if self.split_total else p


class LossInjector:
    """Seeded drop decisions, independent per direction.

    Each direction gets its own RNG stream derived from the model seed, so
    changing one direction's rate never perturbs the other's pattern. One
    draw is consumed per send whenever the direction's rate is nonzero —
    even inside a cut window — so adding or moving cut windows never shifts
    the Bernoulli pattern outside them.
    """

    def __init__(self, model: LossModel):
        self.model = model
        kids = np.random.SeedSequence(model.seed).spawn(2)
        self._rng = {
            Direction.PLANT_TO_SERVER: np.random.default_rng(kids[0]),
            Direction.SERVER_TO_PLANT: np.random.default_rng(kids[1]),
        }
        self.sent = {d: 0 for d in Direction}
        self.dropped = {d: 0 for d in Direction}

    def should_drop(self, direction: Direction, t: float) -> bool:
        self.sent[direction] += 1
        p = self.model.rate(direction)
        bernoulli = p > 0.0 and self._rng[direction].random() < p
        in_cut = any(
            cut_dir == direction and t0 <= t < t1 for cut_dir, t0, t1 in self.model.cut_windows
        )
        if bernoulli or in_cut:
            self.dropped[direction] += 1
            return True
        return False

    def realized_rate(self, direction: Direction) -> float:
        n = self.sent[direction]
        return self.dropped[direction] / n if n else 0.0


# ------------------------------------------------------------- channels


class LockstepChannel:
    """In-process channel: one latest-value slot per direction.

    Frames still round-trip through the codec so lockstep runs exercise
    the same wire contract as the socket paths.
    """

    def __init__(self):
        self._slot: dict[Direction, Datagram | None] = {d: None for d in Direction}
        self._stream: dict[Direction, StreamState] = {d: StreamState() for d in Direction}

    def send(self, direction: Direction, d: Datagram) -> None:
        arrived = decode(encode(d))
        if self._stream[direction].accept(arrived):
            self._slot[direction] = arrived

    def take(self, direction: Direction) -> Datagram | None:
        d = self._slot[direction]
        self._slot[direction] = None
        return d


class Mailbox:
    """Thread-safe latest-value cell; stale values are overwritten."""

    def __init__(self):
        self._lock = threading.Lock()
        self._value: Datagram | None = None

    def put(self, d: Datagram) -> None:
        with self._lock:
            self._value = d

    def take(self) -> Datagram | None:
        with self._lock:
            d, self._value = self._value, None
            return d


class UdpLink:
    """One UDP endpoint: bound socket, optional peer, newest-wins receive.

    ``drain`` (synchronous, non-blocking) empties the socket buffer and
    returns the newest accepted datagram — used by single-process loopback
    runs. ``start_reader`` spawns a daemon thread feeding a Mailbox — used
    by two-process realtime runs.
    """

    def __init__(self, bind: tuple[str, int], peer: tuple[str, int] | None = None):
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self.sock.bind(bind)
        self.sock.setblocking(False)
        self.peer = peer
        self.stream = StreamState()
        self.mailbox = Mailbox()
        self.last_rx_wall: float | None = None
        self._reader: threading.Thread | None = None
        self._stop = threading.Event()

    @property
    def addr(self) -> tuple[str, int]:
        return self.sock.getsockname()

    def send(self, d: Datagram) -> None:
        if self.peer is None:
            raise ProtocolError("no peer address to send to")
        self.sock.sendto(encode(d), self.peer)

    def drain(self) -> Datagram | None:
        newest = None
        while True:
            try:
                frame, sender = self.sock.recvfrom(65536)
            except BlockingIOError:
                break
            if self.peer is None:
                self.peer = sender
            try:
                d = decode(frame)
            except (FramingError, ProtocolError):
                continue  # garbage on the port is not our packet
            if self.stream.accept(d):
                newest = d
        return newest

    def start_reader(self) -> None:
        import time

        def loop():
            self.sock.setblocking(True)
            self.sock.settimeout(0.2)
            while not self._stop.is_set():
                try:
                    frame, sender = self.sock.recvfrom(65536)
                except socket.timeout:
                    continue
                except OSError:
                    break
                if self.peer is None:
                    self.peer = sender
                try:
                    d = decode(frame)
                except (FramingError, ProtocolError):
                    continue
                if self.stream.accept(d):
                    self.mailbox.put(d)
                    self.last_rx_wall = time.monotonic()

        self._reader = threading.Thread(target=loop, daemon=True)
        self._reader.start()

    def close(self) -> None:
        self._stop.set()
        self.sock.close()
        if self._reader is not None:
            self._reader.join(timeout=1.0)
