"""Datagram transports: in-process loopback (deterministic) and UDP sockets."""

from __future__ import annotations

import socket
from collections import deque


class LoopbackLink:
    """One endpoint of an in-process datagram pair; delivery is immediate."""

    def __init__(self):
        self._rx: deque[bytes] = deque()
        self._peer: "LoopbackLink | None" = None

    def send(self, data: bytes) -> None:
        if self._peer is not None:
            self._peer._rx.append(bytes(data))

    def recv_all(self) -> list[bytes]:
        out = list(self._rx)
        self._rx.clear()
        return out

    def close(self) -> None:
        self._peer = None


def loopback_pair() -> tuple[LoopbackLink, LoopbackLink]:
    a, b = LoopbackLink(), LoopbackLink()
    a._peer, b._peer = b, a
    return a, b


class UdpLink:
    """Nonblocking UDP endpoint bound to a local port.

    If `remote` is None the link replies to the last peer that sent to us
    (ground-station style); otherwise datagrams go to the fixed remote.
    """

    def __init__(self, local_port: int, remote: tuple[str, int] | None = None, host: str = "127.0.0.1"):
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.setblocking(False)
        self._sock.bind((host, local_port))
        self._remote = remote
        self.local_port = local_port
        self.dropped_sends = 0

    def send(self, data: bytes) -> None:
        target = self._remote
        if target is None:
            return
        try:
            self._sock.sendto(data, target)
        except OSError:
            self.dropped_sends += 1

    def recv_all(self) -> list[bytes]:
        out = []
        while True:
            try:
                data, addr = self._sock.recvfrom(65536)
            except BlockingIOError:
                break
            except OSError:
                break
            if self._remote is None:
                self._remote = addr
            out.append(data)
        return out

    def close(self) -> None:
        self._sock.close()


class PortBindFailure(Exception):
    pass


def udp_pair(port_a: int, port_b: int, host: str = "127.0.0.1") -> tuple[UdpLink, UdpLink]:
    """Two UDP endpoints wired at each other (a:port_a <-> b:port_b)."""
    try:
        a = UdpLink(port_a, (host, port_b), host)
        b = UdpLink(port_b, (host, port_a), host)
    except OSError as exc:
        raise PortBindFailure(str(exc)) from exc
    return a, b
