"""Deterministic synchronous message-passing substrate.

Nodes may only send to direct neighbors of the topology.  A round consists
of every node consuming its inbox and emitting outgoing messages; all
messages are delivered atomically at the round barrier and become visible
in the next round.  Handlers must depend only on their own state and their
inbox, so sequential execution in node order is observationally identical
to a parallel one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph


class ProtocolViolation(RuntimeError):
    """A node attempted to send to a non-neighbor."""


# Payload kinds.  The tag determines which protocol consumes the message.
@dataclass(frozen=True)
class Probe:
    pass


@dataclass(frozen=True)
class Ack:
    pass


@dataclass(frozen=True)
class Deny:
    pass


@dataclass(frozen=True)
class Label:
    tag: str


@dataclass(frozen=True)
class Vector:
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", np.asarray(self.data, dtype=float))


def payload_volume(payload) -> int:
    """Scalar count carried by a payload; control signals carry none."""
    if isinstance(payload, Vector):
        return int(payload.data.size)
    return 0


@dataclass(frozen=True)
class Message:
    sender: int
    payload: object


@dataclass
class TrafficReport:
    sent: list
    received: list
    volume_sent: list
    volume_received: list

    @property
    def total_messages(self) -> int:
        return sum(self.sent)

    @property
    def total_volume(self) -> int:
        return sum(self.volume_sent)


class Network:
    """Round-based network over a fixed topology, with traffic accounting."""

    def __init__(self, topology: Graph):
        self.topology = topology
        self._adj = [set(a) for a in topology.adjacency()]
        n = topology.node_count
        self._inbox = [[] for _ in range(n)]
        self.round = 0
        self._sent = [0] * n
        self._received = [0] * n
        self._vol_sent = [0] * n
        self._vol_received = [0] * n

    @property
    def node_count(self) -> int:
        return self.topology.node_count

    def inbox(self, i: int):
        """Messages pending for node i (delivered at the last barrier)."""
        return list(self._inbox[i])

    def run_round(self, handlers):
        """Execute one synchronized round.

        ``handlers`` maps every node id to a callable taking the node's
        inbox (a list of Message) and returning an iterable of
        ``(destination, payload)`` pairs.  Raises ProtocolViolation if any
        destination is not a topology neighbor of the sender.
        """
        outgoing = []  # (sender, dest, payload)
        for i in range(self.node_count):
            pending = self._inbox[i]
            self._inbox[i] = []
            for dest, payload in handlers[i](pending):
                if dest not in self._adj[i]:
                    raise ProtocolViolation(
                        f"node {i} sent to non-neighbor {dest} in round {self.round}"
                    )
                outgoing.append((i, dest, payload))
        # Barrier: deliver everything at once, ordered by sender id so that
        # simultaneous arrivals are observed deterministically.
        outgoing.sort(key=lambda t: (t[1], t[0]))
        for sender, dest, payload in outgoing:
            self._inbox[dest].append(Message(sender, payload))
            vol = payload_volume(payload)
            self._sent[sender] += 1
            self._received[dest] += 1
            self._vol_sent[sender] += vol
            self._vol_received[dest] += vol
        self.round += 1

    def traffic_report(self) -> TrafficReport:
        return TrafficReport(
            sent=list(self._sent),
            received=list(self._received),
            volume_sent=list(self._vol_sent),
            volume_received=list(self._vol_received),
        )
