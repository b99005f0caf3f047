"""Continuous-time event engine.

All transmission channels are merged into one exponential race: the time
to the next event is exponential with the summed rate, and the channel is
picked with probability proportional to its rate. Each node's age integral
is advanced lazily, only when the node receives something, plus a final
sweep at the horizon. The integral is exact since age grows at unit rate
between events.

Two backends consume the same stream of uniform draws: a compiled one for
real runs and a pure-Python one built on :mod:`gossip_timestomp.model`,
kept as a readable reference and cross-checked in the tests.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from . import _kernel
from .model import (
    AdversarySpec,
    InvalidStateError,
    Mitm,
    NoAdversary,
    NodeCapture,
    NodeState,
    PacketMeta,
    exchange,
    instantaneous_age,
    timestomp_incoming,
    timestomp_outgoing,
)

if TYPE_CHECKING:
    from .scenarios import ChannelSet

SOURCE = 0
CHUNK_ROWS = 1 << 15


class EngineError(RuntimeError):
    pass


class ConfigError(ValueError):
    pass


class Transform(IntEnum):
    NONE = _kernel.NONE
    STOMP_OUTGOING = _kernel.STOMP_OUTGOING
    STOMP_INCOMING = _kernel.STOMP_INCOMING
    FORCE_FRESH = _kernel.FORCE_FRESH


def adversary_index(n: int) -> int:
    """Array slot of the MITM adversary node."""
    return n + 1


@dataclass(frozen=True)
class Channel:
    """One directed Poisson transmission stream.

    ``param`` is the stomping probability for the two stomp transforms
    and is ignored otherwise.
    """

    src: int
    dst: int
    rate: float
    transform: Transform = Transform.NONE
    param: float = 0.0

    def __post_init__(self):
        if not self.rate > 0:
            raise ConfigError(f"channel rate must be positive: {self}")
        if self.src == self.dst:
            raise ConfigError(f"channel loops on node {self.src}")
        if not 0.0 <= self.param <= 1.0:
            raise ConfigError(f"transform probability out of [0, 1]: {self}")


@dataclass(frozen=True)
class SimConfig:
    n: int
    lam: float = 1.0
    adversary: AdversarySpec = field(default_factory=NoAdversary)
    horizon: Optional[float] = None
    seed: int = 0
    burn_in: float = 0.0
    mode: str = "coin"
    track_sets: bool = False

    def __post_init__(self):
        if self.horizon is None:
            object.__setattr__(self, "horizon", 1000.0 * self.n)
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n}")
        if not self.lam > 0:
            raise ConfigError(f"lambda must be positive, got {self.lam}")
        if not self.horizon > 0:
            raise ConfigError(f"horizon must be positive, got {self.horizon}")
        if not 0.0 <= self.burn_in < 1.0:
            raise ConfigError(f"burn_in must lie in [0, 1), got {self.burn_in}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.mode not in ("coin", "thinned"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.mode == "thinned" and not isinstance(self.adversary, NodeCapture):
            raise ConfigError("thinned mode only applies to node capture")
        if not isinstance(self.adversary, NoAdversary) and self.n < 2:
            raise ConfigError("adversarial scenarios need n >= 2")


@dataclass(frozen=True)
class SimReport:
    v1_hat: float
    vn_hat: Optional[float]
    vA_hat: Optional[float]
    per_node: tuple
    events: int
    config: SimConfig
    # time-averaged ages of N({1..k}) and N({1..k} + {n}), when tracked
    v_S_hat: Optional[tuple] = None
    v_Sn_hat: Optional[tuple] = None


@dataclass(frozen=True)
class Roles:
    regular: tuple
    infected: Optional[int]
    adversary: Optional[int]


def node_roles(config: SimConfig) -> Roles:
    n = config.n
    if isinstance(config.adversary, NoAdversary):
        return Roles(tuple(range(1, n + 1)), None, None)
    regular = tuple(range(1, n))
    if isinstance(config.adversary, Mitm):
        return Roles(regular, n, adversary_index(n))
    return Roles(regular, n, None)


def tracked_sets(config: SimConfig) -> tuple[list, list]:
    """Nested prefix sets of regular nodes, and the same sets plus node n under MITM."""
    roles = node_roles(config)
    prefixes = [list(roles.regular[:k]) for k in range(1, len(roles.regular) + 1)]
    with_n = []
    if isinstance(config.adversary, Mitm):
        with_n = [members + [config.n] for members in prefixes]
    return prefixes, with_n


def _draw_event(cum: Sequence[float], total: float, u_dt: float, u_ch: float) -> tuple[float, int]:
    dt = -math.log(1.0 - u_dt) / total
    idx = min(bisect_right(cum, u_ch * total), len(cum) - 1)
    return dt, idx


def next_event(rates: Sequence[float], rng: np.random.Generator) -> tuple[float, int]:
    """Sample the waiting time and the firing channel of a merged Poisson race."""
    rates = np.asarray(rates, dtype=float)
    if rates.size == 0:
        raise EngineError("empty channel set")
    cum = np.cumsum(rates)
    u_dt, u_ch = rng.random(2)
    return _draw_event(cum, float(cum[-1]), float(u_dt), float(u_ch))


def integrate_age(node: NodeState, upto: float) -> NodeState:
    """Add the exact area under the node's age curve up to ``upto``."""
    width = upto - node.last_accounted
    if width < 0:
        raise InvalidStateError(
            f"node {node.node_id}: cannot integrate back from {node.last_accounted} to {upto}"
        )
    age = instantaneous_age(node, node.last_accounted)
    node.age_integral += width * age + width * width / 2
    node.last_accounted = upto
    return node


def _in_flight(nodes: Sequence[NodeState], ch: Channel, now: float, coin: float) -> PacketMeta:
    if ch.src == SOURCE:
        pkt = PacketMeta(now, now)
    else:
        pkt = nodes[ch.src].packet
    if ch.transform == Transform.STOMP_OUTGOING:
        return timestomp_outgoing(pkt, now, ch.param, coin)
    if ch.transform == Transform.STOMP_INCOMING:
        return timestomp_incoming(pkt, now, ch.param, coin)
    if ch.transform == Transform.FORCE_FRESH:
        return replace(pkt, claimed=now)
    return pkt


def apply_event(nodes: Sequence[NodeState], ch: Channel, now: float, coin: float = 0.0):
    """Deliver one transmission on ``ch`` at time ``now``.

    ``nodes[0]`` stands for the source, whose packet is always
    ``(now, now)``. ``coin`` is the uniform draw used by stomp transforms.
    The receiving node is mutated in place and ``nodes`` is returned.
    """
    if not (0 <= ch.src < len(nodes) and 1 <= ch.dst < len(nodes)) or ch.src == ch.dst:
        raise EngineError(f"invalid channel endpoints {ch.src}->{ch.dst} for {len(nodes)} slots")
    incoming = _in_flight(nodes, ch, now, coin)
    dst = integrate_age(nodes[ch.dst], now)
    dst.packet = exchange(dst.packet, incoming)
    return nodes


class _PythonBackend:
    def __init__(self, size, channels, cum, t_burn, set_members):
        self.nodes = [NodeState(j) for j in range(size)]
        self.channels = channels
        self.cum = list(cum)
        self.total = float(cum[-1])
        self.t = 0.0
        self.t_burn = t_burn
        self.burned = t_burn <= 0.0
        self.snap = [0.0] * size
        self.events = 0
        self.set_members = set_members
        self.set_holder = [members[0] for members in set_members]
        self.set_acc = [0.0] * len(set_members)
        self.set_snap = [0.0] * len(set_members)
        self.set_last = 0.0

    def _integrate_sets(self, tau):
        width = tau - self.set_last
        for s, h in enumerate(self.set_holder):
            age = self.set_last - self.nodes[h].packet.true_origin
            self.set_acc[s] += width * age + width * width / 2
        self.set_last = tau

    def _refresh_holders(self):
        for s, members in enumerate(self.set_members):
            best = members[0]
            for j in members[1:]:
                if self.nodes[j].packet.claimed > self.nodes[best].packet.claimed:
                    best = j
            self.set_holder[s] = best

    def _sweep(self, tau):
        for node in self.nodes[1:]:
            integrate_age(node, tau)
        self._integrate_sets(tau)

    def _burn(self):
        self._sweep(self.t_burn)
        self.snap = [node.age_integral for node in self.nodes]
        self.set_snap = list(self.set_acc)
        self.burned = True

    def advance(self, uniforms, horizon):
        for u_dt, u_ch, coin in uniforms.tolist():
            dt, c = _draw_event(self.cum, self.total, u_dt, u_ch)
            t_new = self.t + dt
            if t_new > horizon:
                if not self.burned:
                    self._burn()
                self._sweep(horizon)
                self.t = horizon
                return _kernel.HORIZON_REACHED
            if t_new <= self.t:
                return _kernel.DUPLICATE_TIME
            if not self.burned and t_new > self.t_burn:
                self._burn()
            if self.set_members:
                self._integrate_sets(t_new)
            ch = self.channels[c]
            before = self.nodes[ch.dst].packet
            apply_event(self.nodes, ch, t_new, coin)
            if self.set_members and self.nodes[ch.dst].packet is not before:
                self._refresh_holders()
            self.t = t_new
            self.events += 1
        return _kernel.CHUNK_EXHAUSTED

    def results(self):
        integrals = [node.age_integral - s for node, s in zip(self.nodes, self.snap)]
        sets = [a - s for a, s in zip(self.set_acc, self.set_snap)]
        return np.array(integrals), np.array(sets), self.events


class _CompiledBackend:
    def __init__(self, size, channels, cum, t_burn, set_members):
        self.claimed = np.zeros(size)
        self.origin = np.zeros(size)
        self.integral = np.zeros(size)
        self.last = np.zeros(size)
        self.snap = np.zeros(size)
        self.cum = np.ascontiguousarray(cum, dtype=np.float64)
        self.src = np.array([ch.src for ch in channels], dtype=np.int64)
        self.dst = np.array([ch.dst for ch in channels], dtype=np.int64)
        self.kind = np.array([int(ch.transform) for ch in channels], dtype=np.int64)
        self.param = np.array([ch.param for ch in channels], dtype=np.float64)
        self.t_burn = float(t_burn)
        # [time, burned-in flag, set-integral time, event count]
        self.clock = np.array([0.0, 1.0 if t_burn <= 0.0 else 0.0, 0.0, 0.0])
        sizes = [len(m) for m in set_members]
        self.set_ptr = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self.set_idx = np.array([j for m in set_members for j in m], dtype=np.int64)
        self.set_holder = np.array([m[0] for m in set_members], dtype=np.int64)
        self.set_acc = np.zeros(len(set_members))
        self.set_snap = np.zeros(len(set_members))

    def advance(self, uniforms, horizon):
        return _kernel.advance(
            self.claimed, self.origin, self.integral, self.last, self.snap,
            self.cum, self.src, self.dst, self.kind, self.param,
            uniforms, self.clock, float(horizon), self.t_burn,
            self.set_ptr, self.set_idx, self.set_holder, self.set_acc, self.set_snap,
        )

    def results(self):
        return self.integral - self.snap, self.set_acc - self.set_snap, int(self.clock[3])


_BACKENDS = {"compiled": _CompiledBackend, "python": _PythonBackend}


def _check_channels(config: SimConfig, channels: "ChannelSet") -> None:
    if channels.n != config.n:
        raise ConfigError(f"channel set built for n={channels.n}, config has n={config.n}")
    if not channels.channels:
        raise EngineError("empty channel set")
    top = adversary_index(config.n)
    for ch in channels.channels:
        if not (0 <= ch.src <= top and 1 <= ch.dst <= top):
            raise EngineError(f"invalid channel endpoints {ch.src}->{ch.dst} for n={config.n}")


def run(config: SimConfig, channels: "ChannelSet", backend: str = "compiled") -> SimReport:
    """Simulate ``channels`` up to ``config.horizon`` and report time-averaged ages.

    Averages are taken over ``[burn_in * horizon, horizon]``. The result
    is a deterministic function of ``(config, channels, backend)``.
    """
    _check_channels(config, channels)
    horizon = float(config.horizon)
    t_burn = config.burn_in * horizon
    prefixes, with_n = tracked_sets(config) if config.track_sets else ([], [])
    chans = list(channels.channels)
    cum = np.cumsum([ch.rate for ch in chans])
    state = _BACKENDS[backend](adversary_index(config.n) + 1, chans, cum, t_burn, prefixes + with_n)

    rng = np.random.default_rng(config.seed)
    while True:
        status = state.advance(rng.random((CHUNK_ROWS, 3)), horizon)
        if status == _kernel.HORIZON_REACHED:
            break
        if status == _kernel.DUPLICATE_TIME:
            raise EngineError("two events landed on the same timestamp")
        if status == _kernel.CLOCK_INVERSION:
            raise InvalidStateError("age integration ran backwards in time")

    integrals, set_integrals, events = state.results()
    span = horizon - t_burn
    averages = integrals / span
    roles = node_roles(config)
    per_node = tuple(float(a) for a in averages[1 : config.n + 1])
    v_S_hat = v_Sn_hat = None
    if config.track_sets:
        set_avgs = [float(a) for a in set_integrals / span]
        v_S_hat = tuple(set_avgs[: len(prefixes)])
        v_Sn_hat = tuple(set_avgs[len(prefixes) :]) or None
    return SimReport(
        v1_hat=float(np.mean([averages[j] for j in roles.regular])),
        vn_hat=None if roles.infected is None else float(averages[roles.infected]),
        vA_hat=None if roles.adversary is None else float(averages[roles.adversary]),
        per_node=per_node,
        events=int(events),
        config=config,
        v_S_hat=v_S_hat,
        v_Sn_hat=v_Sn_hat,
    )
