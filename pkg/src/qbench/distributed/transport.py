"""
Point-to-point message transports between SPMD ranks.

Two implementations share one interface: :class:`InProcessTransport`
(queues, ranks as threads) and :class:`SocketTransport` (length-prefixed
pickles over ``socket.socketpair``, ranks as forked processes).  Every
message carries a per-(src, dst) sequence number that the receiver checks
for strict increase, and a tag naming the protocol step that sent it.
"""
from __future__ import annotations

import pickle
import queue
import socket
import struct
import threading
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Any

import numpy as np

RECV_POLL = 0.05
DEFAULT_TIMEOUT = 600.0


class TransportError(RuntimeError):
    """Message lost, out of order, timed out, or the run was aborted."""


@dataclass
class ExchangeMessage:
    src: int
    dst: int
    seq: int
    tag: Any
    payload: Any

    @property
    def nbytes(self) -> int:
        return self.payload.nbytes if isinstance(self.payload, np.ndarray) else 0


@dataclass
class LinkStats:
    """Counters kept by one rank's endpoint."""
    messages: int = 0
    amplitude_messages: int = 0
    bytes: int = 0
    comm_time: float = 0.0
    tags: Counter = field(default_factory=Counter)

    def to_dict(self) -> dict:
        return {"messages": self.messages, "amplitude_messages": self.amplitude_messages,
                "bytes": self.bytes, "comm_time": self.comm_time}


class Endpoint:
    """One rank's view of a transport."""

    def __init__(self, rank: int, size: int, timeout: float = DEFAULT_TIMEOUT):
        self.rank = rank
        self.size = size
        self.timeout = timeout
        self.stats = LinkStats()
        self._send_seq = [0] * size
        self._recv_seq = [0] * size

    # subclass hooks
    def _put(self, msg: ExchangeMessage) -> None:
        raise NotImplementedError

    def _get(self, src: int) -> ExchangeMessage:
        raise NotImplementedError

    def send(self, dst: int, payload, tag=None) -> None:
        if not 0 <= dst < self.size or dst == self.rank:
            raise TransportError(f"rank {self.rank}: bad destination {dst}")
        t0 = time.perf_counter()
        if isinstance(payload, np.ndarray):
            payload = np.array(payload, copy=True)
        self._send_seq[dst] += 1
        msg = ExchangeMessage(self.rank, dst, self._send_seq[dst], tag, payload)
        self._put(msg)
        self.stats.messages += 1
        if isinstance(payload, np.ndarray) and np.iscomplexobj(payload):
            self.stats.amplitude_messages += 1
            self.stats.tags[tag] += 1
        self.stats.bytes += msg.nbytes
        self.stats.comm_time += time.perf_counter() - t0

    def recv(self, src: int, tag=None):
        t0 = time.perf_counter()
        msg = self._get(src)
        if msg.seq != self._recv_seq[src] + 1:
            raise TransportError(f"rank {self.rank}: sequence {msg.seq} from {src}, "
                                 f"expected {self._recv_seq[src] + 1}")
        self._recv_seq[src] = msg.seq
        if tag is not None and msg.tag != tag:
            raise TransportError(f"rank {self.rank}: got tag {msg.tag!r} from {src}, expected {tag!r}")
        self.stats.comm_time += time.perf_counter() - t0
        return msg.payload

    def abort(self) -> None:
        pass

    def close(self) -> None:
        pass


# -------------------------------------------------------------- in-process

class InProcessTransport:
    """Queue per ordered rank pair; ``endpoint(r)`` is handed to rank thread ``r``."""

    def __init__(self, size: int, timeout: float = DEFAULT_TIMEOUT):
        self.size = size
        self.timeout = timeout
        self.queues = {(a, b): queue.Queue() for a in range(size) for b in range(size) if a != b}
        self.aborted = threading.Event()

    def endpoint(self, rank: int) -> "_QueueEndpoint":
        return _QueueEndpoint(self, rank)


class _QueueEndpoint(Endpoint):
    def __init__(self, hub: InProcessTransport, rank: int):
        super().__init__(rank, hub.size, hub.timeout)
        self.hub = hub

    def _put(self, msg):
        if self.hub.aborted.is_set():
            raise TransportError("run aborted")
        self.hub.queues[(msg.src, msg.dst)].put(msg)

    def _get(self, src):
        q = self.hub.queues[(src, self.rank)]
        deadline = time.monotonic() + self.timeout
        while True:
            if self.hub.aborted.is_set():
                raise TransportError("run aborted by another rank")
            try:
                return q.get(timeout=RECV_POLL)
            except queue.Empty:
                if time.monotonic() > deadline:
                    raise TransportError(f"rank {self.rank}: timed out waiting for rank {src}") from None

    def abort(self):
        self.hub.aborted.set()


# ------------------------------------------------------------------ socket

_HEADER = struct.Struct("!Q")


class SocketTransport:
    """Full mesh of ``socketpair`` links, created before the rank processes fork."""

    def __init__(self, size: int, timeout: float = DEFAULT_TIMEOUT):
        self.size = size
        self.timeout = timeout
        self.links: dict[tuple[int, int], socket.socket] = {}
        for a in range(size):
            for b in range(a + 1, size):
                sa, sb = socket.socketpair()
                self.links[(a, b)] = sa
                self.links[(b, a)] = sb

    def endpoint(self, rank: int) -> "_SocketEndpoint":
        """Keep only this rank's sockets (call inside the forked child)."""
        mine = {b: s for (a, b), s in self.links.items() if a == rank}
        return _SocketEndpoint(rank, self.size, mine, self.timeout)

    def close(self) -> None:
        for s in self.links.values():
            s.close()


class _SocketEndpoint(Endpoint):
    def __init__(self, rank, size, socks: dict[int, socket.socket], timeout):
        super().__init__(rank, size, timeout)
        self.socks = socks
        for s in socks.values():
            s.settimeout(timeout)
        # a writer thread per peer so that two ranks sending large blocks to
        # each other at the same time cannot deadlock on full socket buffers
        self._outbox = {p: queue.Queue() for p in socks}
        self._errors: list[BaseException] = []
        self._writers = [threading.Thread(target=self._writer, args=(p,), daemon=True) for p in socks]
        for t in self._writers:
            t.start()

    def _writer(self, peer):
        s, box = self.socks[peer], self._outbox[peer]
        while True:
            data = box.get()
            if data is None:
                return
            try:
                s.sendall(data)
            except OSError as exc:
                self._errors.append(exc)
                return

    def _put(self, msg):
        if self._errors:
            raise TransportError(f"rank {self.rank}: send failed: {self._errors[0]}")
        body = pickle.dumps(msg, protocol=pickle.HIGHEST_PROTOCOL)
        self._outbox[msg.dst].put(_HEADER.pack(len(body)) + body)

    def _read_exact(self, s, n):
        buf = bytearray(n)
        view = memoryview(buf)
        got = 0
        while got < n:
            try:
                k = s.recv_into(view[got:], n - got)
            except socket.timeout:
                raise TransportError(f"rank {self.rank}: receive timed out") from None
            if k == 0:
                raise TransportError(f"rank {self.rank}: peer closed the link")
            got += k
        return buf

    def _get(self, src):
        s = self.socks[src]
        (length,) = _HEADER.unpack(self._read_exact(s, _HEADER.size))
        return pickle.loads(self._read_exact(s, length))

    def close(self):
        for box in self._outbox.values():
            box.put(None)
        for t in self._writers:
            t.join(timeout=self.timeout)
        for s in self.socks.values():
            try:
                s.shutdown(socket.SHUT_WR)
            except OSError:
                pass


TRANSPORTS = ("inprocess", "socket")
