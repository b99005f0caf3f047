"""Packets, nodes and the adversary's timestamp transforms.

A packet carries two timestamps: the *claimed* one, which is what nodes
compare when deciding whether to keep an incoming packet, and the *true*
generation time at the source, which is what defines the node's age.
An untouched packet has both equal; a timestomped packet keeps its true
origin but advertises either the current time or zero.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union


class InvalidStateError(RuntimeError):
    """Raised when simulation state violates a clock invariant."""


@dataclass(frozen=True)
class PacketMeta:
    claimed: float = 0.0
    true_origin: float = 0.0

    def __post_init__(self):
        if self.claimed < 0 or self.true_origin < 0:
            raise ValueError(f"timestamps must be non-negative: {self}")


FRESH_AT_ZERO = PacketMeta(0.0, 0.0)


@dataclass
class NodeState:
    """Resident packet of one node plus its running age integral.

    The integral is accumulated lazily: ``age_integral`` covers
    ``[0, last_accounted]`` and nothing past it.
    """

    node_id: int
    packet: PacketMeta = FRESH_AT_ZERO
    age_integral: float = 0.0
    last_accounted: float = 0.0


@dataclass(frozen=True)
class NoAdversary:
    pass


@dataclass(frozen=True)
class NodeCapture:
    """Adversary sitting on node ``n``.

    ``p`` is the probability an outgoing packet is stamped with the current
    time (otherwise zero). ``q`` is the probability an incoming packet is
    stamped with zero, i.e. rejected. ``q`` defaults to ``p``.
    """

    p: float = 1.0
    q: float | None = None

    def __post_init__(self):
        if self.q is None:
            object.__setattr__(self, "q", self.p)
        for name in ("p", "q"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class Mitm:
    pass


AdversarySpec = Union[NoAdversary, NodeCapture, Mitm]


def exchange(resident: PacketMeta, incoming: PacketMeta) -> PacketMeta:
    """Keep whichever packet claims the strictly later timestamp.

    Ties keep the resident packet.
    """
    if incoming.claimed > resident.claimed:
        return incoming
    return resident


def timestomp_outgoing(pkt: PacketMeta, now: float, p: float, coin: float) -> PacketMeta:
    """Stamp an outgoing packet with ``now`` if ``coin < p``, else with zero."""
    return replace(pkt, claimed=now if coin < p else 0.0)


def timestomp_incoming(pkt: PacketMeta, now: float, q: float, coin: float) -> PacketMeta:
    """Stamp an incoming packet with zero if ``coin < q``, else with ``now``."""
    return replace(pkt, claimed=0.0 if coin < q else now)


def instantaneous_age(node: NodeState, now: float) -> float:
    age = now - node.packet.true_origin
    if age < 0:
        raise InvalidStateError(
            f"node {node.node_id}: time {now} precedes packet origin {node.packet.true_origin}"
        )
    return age
