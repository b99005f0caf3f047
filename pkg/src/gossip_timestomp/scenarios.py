"""Channel sets for the network and attack configurations.

Node 0 is the source and nodes 1..n are users. Node ``n`` is the target
of both attacks; under MITM the adversary occupies slot ``n + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .engine import (
    SOURCE,
    Channel,
    ConfigError,
    SimConfig,
    SimReport,
    Transform,
    adversary_index,
    run,
)
from .model import Mitm, NoAdversary, NodeCapture

TOPOLOGIES = ("baseline", "node_capture", "node_capture_thinned", "mitm")


@dataclass(frozen=True)
class ChannelSet:
    channels: tuple
    n: int
    topology_tag: str

    @cached_property
    def total_rate(self) -> float:
        return float(np.sum([ch.rate for ch in self.channels]))

    def count(self, transform: Transform) -> int:
        return sum(ch.transform == transform for ch in self.channels)

    def into(self, node: int) -> list:
        return [ch for ch in self.channels if ch.dst == node]

    def out_of(self, node: int) -> list:
        return [ch for ch in self.channels if ch.src == node]


def _check(n, lam, minimum):
    if int(n) != n or n < minimum:
        raise ConfigError(f"n must be an integer >= {minimum}, got {n}")
    if not lam > 0:
        raise ConfigError(f"lambda must be positive, got {lam}")


def _check_prob(**probs):
    for name, value in probs.items():
        if not 0.0 <= value <= 1.0:
            raise ConfigError(f"{name} must lie in [0, 1], got {value}")


def _source_feed(users, n, lam):
    return [Channel(SOURCE, i, lam / n, Transform.FORCE_FRESH) for i in users]


def _gossip(nodes, n, lam):
    rate = lam / (n - 1)
    return [Channel(i, j, rate) for i in nodes for j in nodes if i != j]


def build_baseline(n: int, lam: float = 1.0) -> ChannelSet:
    _check(n, lam, 1)
    users = range(1, n + 1)
    channels = _source_feed(users, n, lam)
    if n > 1:
        channels += _gossip(users, n, lam)
    return ChannelSet(tuple(channels), n, "baseline")


def build_node_capture(n: int, lam: float = 1.0, p: float = 1.0, q: float | None = None) -> ChannelSet:
    """Full mesh where every packet through node ``n`` gets a coin-flipped timestamp."""
    q = p if q is None else q
    _check(n, lam, 2)
    _check_prob(p=p, q=q)
    channels = _source_feed(range(1, n + 1), n, lam)
    rate = lam / (n - 1)
    for ch in _gossip(range(1, n + 1), n, lam):
        if ch.src == n:
            ch = Channel(ch.src, ch.dst, rate, Transform.STOMP_OUTGOING, p)
        elif ch.dst == n:
            ch = Channel(ch.src, ch.dst, rate, Transform.STOMP_INCOMING, q)
        channels.append(ch)
    return ChannelSet(tuple(channels), n, "node_capture")


def build_node_capture_thinned(n: int, lam: float = 1.0, p: float = 1.0, q: float | None = None) -> ChannelSet:
    """Node capture with the acceptance coins folded into the channel rates.

    Only the transmissions that would survive the adversary are kept, each
    delivered with a current claimed timestamp so it is always accepted.
    """
    q = p if q is None else q
    _check(n, lam, 2)
    _check_prob(p=p, q=q)
    regular = range(1, n)
    channels = _source_feed(range(1, n + 1), n, lam)
    channels += _gossip(regular, n, lam)
    if q < 1:
        channels += [Channel(i, n, (1 - q) * lam / (n - 1), Transform.FORCE_FRESH) for i in regular]
    if p > 0:
        channels += [Channel(n, i, p * lam / (n - 1), Transform.FORCE_FRESH) for i in regular]
    return ChannelSet(tuple(channels), n, "node_capture_thinned")


def build_mitm(n: int, lam: float = 1.0) -> ChannelSet:
    """Adversary intercepts the source feed of node ``n`` and replays it at rate ``lam``."""
    _check(n, lam, 2)
    a = adversary_index(n)
    channels = [Channel(SOURCE, a, lam / n, Transform.FORCE_FRESH)]
    channels += _source_feed(range(1, n), n, lam)
    channels.append(Channel(a, n, lam, Transform.FORCE_FRESH))
    channels += _gossip(range(1, n + 1), n, lam)
    return ChannelSet(tuple(channels), n, "mitm")


def topology_of(config: SimConfig) -> str:
    adv = config.adversary
    if isinstance(adv, NoAdversary):
        return "baseline"
    if isinstance(adv, Mitm):
        return "mitm"
    return "node_capture_thinned" if config.mode == "thinned" else "node_capture"


def build_channels(config: SimConfig) -> ChannelSet:
    tag = topology_of(config)
    if tag == "baseline":
        return build_baseline(config.n, config.lam)
    if tag == "mitm":
        return build_mitm(config.n, config.lam)
    builder = build_node_capture_thinned if tag == "node_capture_thinned" else build_node_capture
    return builder(config.n, config.lam, config.adversary.p, config.adversary.q)


def simulate(config: SimConfig, backend: str = "compiled") -> SimReport:
    return run(config, build_channels(config), backend=backend)


def config_for(
    topology: str,
    n: int,
    lam: float = 1.0,
    p: float = 1.0,
    q: float | None = None,
    **kwargs,
) -> SimConfig:
    """SimConfig for one of :data:`TOPOLOGIES`."""
    if topology == "baseline":
        return SimConfig(n, lam, NoAdversary(), **kwargs)
    if topology == "mitm":
        return SimConfig(n, lam, Mitm(), **kwargs)
    if topology in ("node_capture", "node_capture_thinned"):
        mode = "thinned" if topology == "node_capture_thinned" else "coin"
        try:
            adversary = NodeCapture(p, q)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return SimConfig(n, lam, adversary, mode=mode, **kwargs)
    raise ConfigError(f"unknown topology {topology!r}")
