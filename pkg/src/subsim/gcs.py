"""Ground-side proxy: wire frames in, namespaced topic publications out.

The topic bus is the in-process stand-in for a middleware: planners,
benchmarks and the UI subscribe to `/robot_<i>/<channel>` topics and never
touch the byte protocol.  Channels: state, attitude, heartbeat, ack, cmd.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass
from typing import Callable

from . import wire
from .control import JointTrajectoryMsg

CHANNELS = ("state", "attitude", "heartbeat", "ack", "cmd")


def topic_name(robot_index: int, channel: str) -> str:
    if channel not in CHANNELS:
        raise ValueError(f"unknown channel {channel!r}")
    return f"/robot_{robot_index}/{channel}"


class UnknownRobot(Exception):
    pass


class TopicBus:
    """Publish/subscribe with per-topic FIFO order and a last-value cache."""

    def __init__(self):
        self._lock = threading.Lock()
        self._subs: dict[str, list[Callable]] = {}
        self._queues: dict[str, list[deque]] = {}
        self._latest: dict[str, object] = {}

    def publish(self, topic: str, msg) -> None:
        with self._lock:
            self._latest[topic] = msg
            callbacks = list(self._subs.get(topic, ()))
            queues = list(self._queues.get(topic, ()))
        for q in queues:
            q.append(msg)
        for cb in callbacks:
            cb(msg)

    def subscribe(self, topic: str, callback: Callable) -> None:
        with self._lock:
            self._subs.setdefault(topic, []).append(callback)

    def subscribe_queue(self, topic: str, maxlen: int | None = None) -> deque:
        q: deque = deque(maxlen=maxlen)
        with self._lock:
            self._queues.setdefault(topic, []).append(q)
        return q

    def latest(self, topic: str):
        with self._lock:
            return self._latest.get(topic)


@dataclass(eq=False)
class ProxyCounters:
    decode_drops: int = 0
    unknown_msgs: int = 0
    frames_routed: int = 0


class GcsProxy:
    """Decodes robot telemetry onto the bus and encodes bus commands back out."""

    def __init__(self, bus: TopicBus):
        self.bus = bus
        self.counters = ProxyCounters()
        self._links: dict[int, object] = {}
        self._parsers: dict[int, wire.FrameParser] = {}
        self._seq: dict[int, wire.SeqCounter] = {}
        self._traj_ids: dict[int, int] = {}

    def attach_robot(self, robot_index: int, gcs_link) -> None:
        self._links[robot_index] = gcs_link
        self._parsers[robot_index] = wire.FrameParser()
        self._seq[robot_index] = wire.SeqCounter()
        self._traj_ids[robot_index] = 0
        self.bus.subscribe(topic_name(robot_index, "cmd"), lambda msg, i=robot_index: self._on_cmd(i, msg))

    def _on_cmd(self, robot_index: int, msg) -> None:
        if isinstance(msg, JointTrajectoryMsg):
            self.send_trajectory(robot_index, msg)
        else:
            self.publish_command(robot_index, msg)

    @property
    def robots(self) -> list[int]:
        return sorted(self._links)

    # -- inbound ---------------------------------------------------------------

    def route_inbound(self, data: bytes, robot_index: int | None = None) -> int:
        """Decode frames from raw bytes and publish under their sys_id namespace.

        Returns the number of frames routed; malformed input only bumps
        counters.  `robot_index` selects the per-link reassembly buffer.
        """
        parser = self._parsers.setdefault(robot_index, wire.FrameParser())
        before_drops, before_unknown = parser.drops, parser.unknown
        routed = 0
        for frame in parser.feed(data):
            routed += self._publish_frame(frame)
        self.counters.decode_drops += parser.drops - before_drops
        self.counters.unknown_msgs += parser.unknown - before_unknown
        return routed

    def _publish_frame(self, frame: wire.Frame) -> int:
        idx = wire.robot_index_for(frame.sys_id)
        if idx < 0:
            return 0
        msg = frame.msg
        if isinstance(msg, wire.LocalPosition):
            self.bus.publish(topic_name(idx, "state"), msg)
        elif isinstance(msg, wire.Attitude):
            self.bus.publish(topic_name(idx, "attitude"), msg)
        elif isinstance(msg, wire.Heartbeat):
            self.bus.publish(topic_name(idx, "heartbeat"), msg)
        elif isinstance(msg, wire.Ack):
            self.bus.publish(topic_name(idx, "ack"), msg)
        else:
            return 0
        self.counters.frames_routed += 1
        return 1

    def poll(self) -> None:
        """Drain all robot links and route whatever telemetry arrived."""
        for idx, link in self._links.items():
            for datagram in link.recv_all():
                self.route_inbound(datagram, idx)

    # -- outbound ----------------------------------------------------------------

    def publish_command(self, robot_index: int, msg: wire.Message) -> bytes:
        """Encode a command for one robot and send it on that robot's link only."""
        link = self._links.get(robot_index)
        if link is None:
            raise UnknownRobot(f"robot {robot_index} not attached")
        raw = wire.encode(msg, self._seq[robot_index].next(), wire.sys_id_for(robot_index))
        link.send(raw)
        return raw

    def send_trajectory(self, robot_index: int, traj: JointTrajectoryMsg) -> None:
        """Ship a timed trajectory as a header frame plus one frame per point."""
        if robot_index not in self._links:
            raise UnknownRobot(f"robot {robot_index} not attached")
        self._traj_ids[robot_index] = (self._traj_ids[robot_index] + 1) & 0xFFFF
        self.publish_command(robot_index, wire.TrajectoryHeader(len(traj.points), self._traj_ids[robot_index]))
        for p in traj.points:
            self.publish_command(
                robot_index,
                wire.TrajectorySetpoint(p.positions[0], p.positions[1], p.positions[2], p.positions[3], p.time_from_start),
            )
