"""Age of information in gossip networks under timestamp-manipulating adversaries."""

__version__ = "0.1.0"

from .analytics import (  # noqa: E402
    RecursionSolution,
    asymptotics,
    harmonic,
    solve_baseline,
    solve_mitm,
    solve_node_capture,
)
from .engine import Channel, SimConfig, SimReport, Transform, run  # noqa: E402
from .model import Mitm, NoAdversary, NodeCapture, PacketMeta  # noqa: E402
from .scenarios import (  # noqa: E402
    ChannelSet,
    build_baseline,
    build_channels,
    build_mitm,
    build_node_capture,
    build_node_capture_thinned,
    config_for,
    simulate,
)
