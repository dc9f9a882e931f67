"""Compact framed binary protocol and per-robot port bookkeeping.

Frame layout (little-endian multi-byte fields)::

    magic   u8   0xA5
    len     u8   payload length
    seq     u8   per-link sequence, wraps mod 256
    sys_id  u8   robot index + 1; 0 is the ground side
    comp_id u8
    msg_id  u16
    payload len bytes
    crc     u16  CRC-16/CCITT-FALSE over bytes [len .. payload] inclusive

The codec is transport agnostic: one frame per UDP datagram in socket mode,
or raw byte streams reassembled by :class:`FrameParser` in loopback mode.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = 0xA5
HEADER_LEN = 7  # magic..msg_id
CRC_LEN = 2

GCS_SYS_ID = 0

# --------------------------------------------------------------------------
# CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no xor-out.


def _build_crc_table() -> list[int]:
    table = []
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021) & 0xFFFF if crc & 0x8000 else (crc << 1) & 0xFFFF
        table.append(crc)
    return table


_CRC_TABLE = _build_crc_table()


def crc16(data: bytes, init: int = 0xFFFF) -> int:
    crc = init
    for b in data:
        crc = ((crc << 8) & 0xFFFF) ^ _CRC_TABLE[((crc >> 8) ^ b) & 0xFF]
    return crc


# --------------------------------------------------------------------------
# Errors


class WireError(Exception):
    """Base decode error; ``consumed`` tells a stream reader how far to skip."""

    consumed = 0


class BadMagic(WireError):
    consumed = 1


class BadCrc(WireError):
    def __init__(self, msg: str, consumed: int):
        super().__init__(msg)
        self.consumed = consumed


class Truncated(WireError):
    consumed = 0


class UnknownMsgId(WireError):
    def __init__(self, msg_id: int, consumed: int):
        super().__init__(f"unknown msg_id {msg_id}")
        self.msg_id = msg_id
        self.consumed = consumed


class PayloadTooLarge(WireError):
    pass


class PortRangeExceeded(Exception):
    pass


class DuplicateAllocation(Exception):
    pass


# --------------------------------------------------------------------------
# Messages

def _f32(x: float) -> float:
    """Round to the nearest binary32 value (wire floats are f32)."""
    return struct.unpack("<f", struct.pack("<f", x))[0]


def _f32s(xs) -> tuple[float, ...]:
    return tuple(_f32(x) for x in xs)


MODE_DISARMED = 0
MODE_MANUAL = 1
MODE_GUIDED = 2

ACK_OK = 0
ACK_DENIED = 1


@dataclass(frozen=True)
class Heartbeat:
    MSG_ID = 0
    mode: int
    armed: int

    def pack(self) -> bytes:
        return struct.pack("<BB", self.mode, self.armed)

    @classmethod
    def unpack(cls, payload: bytes) -> "Heartbeat":
        return cls(*struct.unpack("<BB", payload))


@dataclass(frozen=True)
class Arm:
    MSG_ID = 1
    flag: int

    def pack(self) -> bytes:
        return struct.pack("<B", self.flag)

    @classmethod
    def unpack(cls, payload: bytes) -> "Arm":
        return cls(*struct.unpack("<B", payload))


@dataclass(frozen=True)
class SetMode:
    MSG_ID = 2
    mode: int

    def pack(self) -> bytes:
        return struct.pack("<B", self.mode)

    @classmethod
    def unpack(cls, payload: bytes) -> "SetMode":
        return cls(*struct.unpack("<B", payload))


@dataclass(frozen=True)
class RcOverride:
    """Six operator axes (x, y, z, roll, pitch, yaw), each in [-1000, 1000]."""

    MSG_ID = 3
    channels: tuple[int, ...]

    def pack(self) -> bytes:
        return struct.pack("<6h", *self.channels)

    @classmethod
    def unpack(cls, payload: bytes) -> "RcOverride":
        return cls(tuple(struct.unpack("<6h", payload)))


@dataclass(frozen=True)
class Attitude:
    MSG_ID = 30
    quat: tuple[float, float, float, float]  # w, x, y, z
    rates: tuple[float, float, float]
    time_ms: int

    def __post_init__(self):
        object.__setattr__(self, "quat", _f32s(self.quat))
        object.__setattr__(self, "rates", _f32s(self.rates))

    def pack(self) -> bytes:
        return struct.pack("<7fI", *self.quat, *self.rates, self.time_ms)

    @classmethod
    def unpack(cls, payload: bytes) -> "Attitude":
        v = struct.unpack("<7fI", payload)
        return cls(tuple(v[0:4]), tuple(v[4:7]), v[7])


@dataclass(frozen=True)
class LocalPosition:
    MSG_ID = 32
    position: tuple[float, float, float]
    velocity: tuple[float, float, float]
    time_ms: int

    def __post_init__(self):
        object.__setattr__(self, "position", _f32s(self.position))
        object.__setattr__(self, "velocity", _f32s(self.velocity))

    def pack(self) -> bytes:
        return struct.pack("<6fI", *self.position, *self.velocity, self.time_ms)

    @classmethod
    def unpack(cls, payload: bytes) -> "LocalPosition":
        v = struct.unpack("<6fI", payload)
        return cls(tuple(v[0:3]), tuple(v[3:6]), v[6])


SENSOR_HAS_IMU = 1
SENSOR_HAS_DEPTH = 2
SENSOR_HAS_FIX = 4


@dataclass(frozen=True)
class SensorState:
    """IMU + depth + position fix bundle; flags mark which fields are fresh."""

    MSG_ID = 40
    accel: tuple[float, float, float]
    gyro: tuple[float, float, float]
    depth: float
    fix: tuple[float, float, float]
    flags: int
    time_ms: int

    def __post_init__(self):
        object.__setattr__(self, "accel", _f32s(self.accel))
        object.__setattr__(self, "gyro", _f32s(self.gyro))
        object.__setattr__(self, "depth", _f32(self.depth))
        object.__setattr__(self, "fix", _f32s(self.fix))

    def pack(self) -> bytes:
        return struct.pack("<10fBI", *self.accel, *self.gyro, self.depth, *self.fix, self.flags, self.time_ms)

    @classmethod
    def unpack(cls, payload: bytes) -> "SensorState":
        v = struct.unpack("<10fBI", payload)
        return cls(tuple(v[0:3]), tuple(v[3:6]), v[6], tuple(v[7:10]), v[10], v[11])


@dataclass(frozen=True)
class ActuatorCmd:
    MSG_ID = 41
    forces: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "forces", _f32s(self.forces))

    def pack(self) -> bytes:
        return struct.pack(f"<{len(self.forces)}f", *self.forces)

    @classmethod
    def unpack(cls, payload: bytes) -> "ActuatorCmd":
        if len(payload) % 4:
            raise ValueError("actuator payload not a multiple of 4")
        return cls(struct.unpack(f"<{len(payload) // 4}f", payload))


@dataclass(frozen=True)
class TrajectorySetpoint:
    """One timed waypoint (x, y, z, yaw, time_from_start)."""

    MSG_ID = 80
    x: float
    y: float
    z: float
    yaw: float
    time_from_start: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "z", "yaw", "time_from_start"):
            object.__setattr__(self, name, _f32(getattr(self, name)))

    def pack(self) -> bytes:
        return struct.pack("<5f", self.x, self.y, self.z, self.yaw, self.time_from_start)

    @classmethod
    def unpack(cls, payload: bytes) -> "TrajectorySetpoint":
        return cls(*struct.unpack("<5f", payload))


@dataclass(frozen=True)
class TrajectoryHeader:
    """Announces a transfer of `count` setpoint frames forming one trajectory."""

    MSG_ID = 81
    count: int
    traj_id: int

    def pack(self) -> bytes:
        return struct.pack("<HH", self.count, self.traj_id)

    @classmethod
    def unpack(cls, payload: bytes) -> "TrajectoryHeader":
        return cls(*struct.unpack("<HH", payload))


@dataclass(frozen=True)
class Ack:
    MSG_ID = 255
    acked_msg_id: int
    result: int

    def pack(self) -> bytes:
        return struct.pack("<HB", self.acked_msg_id, self.result)

    @classmethod
    def unpack(cls, payload: bytes) -> "Ack":
        return cls(*struct.unpack("<HB", payload))


MESSAGE_TYPES = {
    cls.MSG_ID: cls
    for cls in (
        Heartbeat,
        Arm,
        SetMode,
        RcOverride,
        Attitude,
        LocalPosition,
        SensorState,
        ActuatorCmd,
        TrajectorySetpoint,
        TrajectoryHeader,
        Ack,
    )
}

Message = (
    Heartbeat
    | Arm
    | SetMode
    | RcOverride
    | Attitude
    | LocalPosition
    | SensorState
    | ActuatorCmd
    | TrajectorySetpoint
    | TrajectoryHeader
    | Ack
)


@dataclass(frozen=True)
class Frame:
    seq: int
    sys_id: int
    comp_id: int
    msg: Message


# --------------------------------------------------------------------------
# Codec


def encode(msg: Message, seq: int, sys_id: int, comp_id: int = 1) -> bytes:
    payload = msg.pack()
    if len(payload) > 255:
        raise PayloadTooLarge(f"payload {len(payload)} > 255")
    header = struct.pack("<BBBBBH", MAGIC, len(payload), seq & 0xFF, sys_id & 0xFF, comp_id & 0xFF, msg.MSG_ID)
    body = header[1:] + payload
    return header + payload + struct.pack("<H", crc16(body))


def decode(buf: bytes) -> tuple[Frame, int]:
    """Decode one frame from the start of buf; returns (frame, bytes consumed).

    Never reads past the end of the frame, so callers can feed arbitrary byte
    streams and reassemble at any split point.
    """
    if len(buf) == 0:
        raise Truncated("empty input")
    if buf[0] != MAGIC:
        raise BadMagic(f"bad magic 0x{buf[0]:02x}")
    if len(buf) < HEADER_LEN:
        raise Truncated("incomplete header")
    length = buf[1]
    total = HEADER_LEN + length + CRC_LEN
    if len(buf) < total:
        raise Truncated(f"need {total} bytes, have {len(buf)}")
    seq, sys_id, comp_id = buf[2], buf[3], buf[4]
    (msg_id,) = struct.unpack_from("<H", buf, 5)
    (crc_rx,) = struct.unpack_from("<H", buf, HEADER_LEN + length)
    crc_calc = crc16(bytes(buf[1 : HEADER_LEN + length]))
    if crc_rx != crc_calc:
        raise BadCrc(f"crc mismatch rx=0x{crc_rx:04x} calc=0x{crc_calc:04x}", total)
    cls = MESSAGE_TYPES.get(msg_id)
    if cls is None:
        raise UnknownMsgId(msg_id, total)
    try:
        msg = cls.unpack(bytes(buf[HEADER_LEN : HEADER_LEN + length]))
    except (struct.error, ValueError) as exc:
        raise BadCrc(f"payload shape invalid for msg_id {msg_id}: {exc}", total) from exc
    return Frame(seq, sys_id, comp_id, msg), total


class FrameParser:
    """Streaming reassembler with per-link drop and sequence-gap counters."""

    def __init__(self):
        self._buf = bytearray()
        self.drops = 0
        self.unknown = 0
        self.gaps = 0
        self._last_seq: int | None = None

    def feed(self, data: bytes) -> list[Frame]:
        self._buf.extend(data)
        frames: list[Frame] = []
        while self._buf:
            try:
                frame, consumed = decode(self._buf)
            except Truncated:
                break
            except UnknownMsgId as exc:
                self.unknown += 1
                del self._buf[: exc.consumed]
                continue
            except WireError as exc:
                self.drops += 1
                del self._buf[: max(1, exc.consumed)]
                continue
            del self._buf[:consumed]
            if self._last_seq is not None:
                expected = (self._last_seq + 1) & 0xFF
                if frame.seq != expected:
                    self.gaps += (frame.seq - expected) & 0xFF
            self._last_seq = frame.seq
            frames.append(frame)
        return frames


class SeqCounter:
    """Per-link transmit sequence, wraps mod 256."""

    def __init__(self):
        self._seq = -1

    def next(self) -> int:
        self._seq = (self._seq + 1) & 0xFF
        return self._seq


# --------------------------------------------------------------------------
# Port allocation


@dataclass(frozen=True)
class PortBlock:
    fdm_state: int  # sim -> FCU sensor frames
    fdm_cmd: int  # FCU -> sim actuator frames
    gcs_link: int  # FCU <-> ground proxy

    def __iter__(self):
        return iter((self.fdm_state, self.fdm_cmd, self.gcs_link))


@dataclass
class PortRegistry:
    base: int = 9000
    stride: int = 10
    allocations: dict[int, PortBlock] = field(default_factory=dict)

    def allocate(self, robot_index: int) -> PortBlock:
        if robot_index < 0:
            raise ValueError("robot_index must be >= 0")
        if robot_index in self.allocations:
            raise DuplicateAllocation(f"robot {robot_index} already allocated")
        first = self.base + self.stride * robot_index
        block = PortBlock(first, first + 1, first + 2)
        if first + 2 > 65535:
            raise PortRangeExceeded(f"robot {robot_index} needs port {first + 2} > 65535")
        self.allocations[robot_index] = block
        return block


def allocate_ports(registry: PortRegistry, robot_index: int) -> PortBlock:
    return registry.allocate(robot_index)


def sys_id_for(robot_index: int) -> int:
    return robot_index + 1


def robot_index_for(sys_id: int) -> int:
    return sys_id - 1


def quat_to_tuple(q: np.ndarray) -> tuple[float, float, float, float]:
    return (float(q[0]), float(q[1]), float(q[2]), float(q[3]))
