"""Proxy routing, namespacing, and the topic bus."""

import numpy as np
import pytest

from subsim import wire
from subsim.control import JointTrajectoryMsg, TrajectoryPoint
from subsim.gcs import GcsProxy, TopicBus, UnknownRobot, topic_name
from subsim.transport import loopback_pair


def make_proxy(robots=(0, 1)):
    bus = TopicBus()
    proxy = GcsProxy(bus)
    fcu_ends = {}
    for i in robots:
        proxy_end, fcu_end = loopback_pair()
        proxy.attach_robot(i, proxy_end)
        fcu_ends[i] = fcu_end
    return bus, proxy, fcu_ends


class TestBus:
    def test_fifo_per_topic(self):
        bus = TopicBus()
        got = []
        bus.subscribe("/robot_0/state", got.append)
        for k in range(10):
            bus.publish("/robot_0/state", k)
        assert got == list(range(10))

    def test_latest_cache(self):
        bus = TopicBus()
        assert bus.latest("/robot_0/state") is None
        bus.publish("/robot_0/state", "a")
        bus.publish("/robot_0/state", "b")
        assert bus.latest("/robot_0/state") == "b"

    def test_queue_subscription(self):
        bus = TopicBus()
        q = bus.subscribe_queue("/robot_1/ack", maxlen=2)
        for k in range(5):
            bus.publish("/robot_1/ack", k)
        assert list(q) == [3, 4]  # bounded, oldest dropped

    def test_topic_name_validation(self):
        assert topic_name(2, "state") == "/robot_2/state"
        with pytest.raises(ValueError):
            topic_name(0, "bogus")


class TestInbound:
    def test_namespaced_by_sys_id(self):
        bus, proxy, _ = make_proxy()
        msg = wire.LocalPosition((1, 2, -3), (0, 0, 0), 10)
        proxy.route_inbound(wire.encode(msg, 0, sys_id=2))
        assert bus.latest("/robot_1/state") == msg
        assert bus.latest("/robot_0/state") is None

    def test_garbage_counted_not_fatal(self):
        bus, proxy, _ = make_proxy()
        routed = proxy.route_inbound(b"\x00\x01\x02 junk bytes \xff")
        assert routed == 0
        assert proxy.counters.decode_drops >= 1

    def test_no_crosstalk_under_interleaving(self):
        bus, proxy, _ = make_proxy()
        gen = np.random.default_rng(6)
        sent = {0: [], 1: []}
        for k in range(300):
            idx = int(gen.integers(0, 2))
            msg = wire.LocalPosition((float(k), float(idx), 0.0), (0, 0, 0), k)
            sent[idx].append(msg)
            proxy.route_inbound(wire.encode(msg, k & 0xFF, sys_id=idx + 1))
        for idx in (0, 1):
            latest = bus.latest(topic_name(idx, "state"))
            assert latest == sent[idx][-1]
            assert latest.position[1] == float(idx)

    def test_all_channels_routed(self):
        bus, proxy, _ = make_proxy()
        frames = [
            wire.Heartbeat(1, 1),
            wire.Attitude((1, 0, 0, 0), (0, 0, 0), 5),
            wire.LocalPosition((0, 0, 0), (0, 0, 0), 5),
            wire.Ack(1, 0),
        ]
        for msg in frames:
            proxy.route_inbound(wire.encode(msg, 0, sys_id=1))
        for channel in ("heartbeat", "attitude", "state", "ack"):
            assert bus.latest(topic_name(0, channel)) is not None


class TestOutbound:
    def test_command_lands_on_right_link_with_sys_id(self):
        _, proxy, fcu_ends = make_proxy()
        proxy.publish_command(0, wire.Arm(1))
        raw = fcu_ends[0].recv_all()
        assert len(raw) == 1
        frame, _ = wire.decode(raw[0])
        assert frame.sys_id == 1
        assert fcu_ends[1].recv_all() == []

    def test_unknown_robot(self):
        _, proxy, _ = make_proxy()
        with pytest.raises(UnknownRobot):
            proxy.publish_command(9, wire.Arm(1))

    def test_seq_increments_mod_256(self):
        _, proxy, fcu_ends = make_proxy()
        for _ in range(300):
            proxy.publish_command(0, wire.Arm(1))
        seqs = []
        parser = wire.FrameParser()
        for raw in fcu_ends[0].recv_all():
            seqs.extend(f.seq for f in parser.feed(raw))
        assert seqs == [k & 0xFF for k in range(300)]
        assert parser.gaps == 0

    def test_cmd_topic_routes_trajectory(self):
        bus, proxy, fcu_ends = make_proxy()
        traj = JointTrajectoryMsg(0, [TrajectoryPoint((1, 2, -3, 0.1), 0.0), TrajectoryPoint((2, 2, -3, 0.1), 4.0)])
        bus.publish(topic_name(0, "cmd"), traj)
        parser = wire.FrameParser()
        msgs = []
        for raw in fcu_ends[0].recv_all():
            msgs.extend(f.msg for f in parser.feed(raw))
        assert isinstance(msgs[0], wire.TrajectoryHeader)
        assert msgs[0].count == 2
        assert len([m for m in msgs if isinstance(m, wire.TrajectorySetpoint)]) == 2

    def test_cmd_topic_routes_plain_command(self):
        bus, proxy, fcu_ends = make_proxy()
        bus.publish(topic_name(1, "cmd"), wire.SetMode(wire.MODE_GUIDED))
        frame, _ = wire.decode(fcu_ends[1].recv_all()[0])
        assert frame.msg == wire.SetMode(wire.MODE_GUIDED)
        assert frame.sys_id == 2
