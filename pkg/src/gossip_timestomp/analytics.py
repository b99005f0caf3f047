"""Exact stationary ages from the SHS balance recursions, and their asymptotics.

Every solver walks the set size ``k`` downward from the largest set, where
the coupling to the next-larger set vanishes, so each solve is ``O(n)``.
Node capture has one extra unknown, the infected node's age ``v_n``,
which enters every level linearly. Levels are carried as affine functions
``a_k + b_k * v_n`` and the loop is closed by the infected node's own
balance equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class RecursionSolution:
    """Stationary expected ages.

    ``v_S[k - 1]`` is the age of the freshest-claiming node among any ``k``
    regular nodes. ``v_Sn[k - 1]`` is the same for those ``k`` nodes plus
    node ``n`` (MITM only).
    """

    v_S: tuple
    v_n: Optional[float] = None
    v_Sn: Optional[tuple] = None
    v_A: Optional[float] = None

    @property
    def v1(self) -> float:
        return self.v_S[0]


def _check(n, lam, minimum=2):
    if int(n) != n or n < minimum:
        raise ValueError(f"n must be an integer >= {minimum}, got {n}")
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")


def harmonic(m: int) -> float:
    return math.fsum(1.0 / k for k in range(1, m + 1))


def solve_node_capture(n: int, lam: float = 1.0, p: float = 1.0, q: float | None = None) -> RecursionSolution:
    """Ages under a node-capture adversary stomping with probabilities ``(p, q)``."""
    q = p if q is None else q
    _check(n, lam)
    for name, value in (("p", p), ("q", q)):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {value}")

    coeffs = [None] * n
    a = b = 0.0
    for k in range(n - 1, 0, -1):
        ahead = (n - k - 1) / (n - 1)
        denom = 1 / n + ahead + p / (n - 1)
        a = (1 / (k * lam) + ahead * a) / denom
        b = (ahead * b + p / (n - 1)) / denom
        coeffs[k] = (a, b)

    a1, b1 = coeffs[1]
    if q == 1:
        v_n = n / lam
    else:
        v_n = (1 / lam + (1 - q) * a1) / (1 / n + (1 - q) * (1 - b1))
    v_S = tuple(coeffs[k][0] + coeffs[k][1] * v_n for k in range(1, n))
    return RecursionSolution(v_S=v_S, v_n=v_n)


def solve_mitm(n: int, lam: float = 1.0) -> RecursionSolution:
    """Ages when an adversary replays stale content into node ``n`` at rate ``lam``.

    ``v_n`` is the ``k = 0`` member of the set-plus-``n`` family.
    """
    _check(n, lam)
    v_A = n / lam
    with_n = [0.0] * n
    nxt = 0.0
    for k in range(n - 1, -1, -1):
        cross = (k + 1) * (n - 1 - k) / (n - 1)
        nxt = (1 / lam + cross * nxt + v_A) / (k / n + cross + 1)
        with_n[k] = nxt

    v_S = [0.0] * n
    nxt = 0.0
    for k in range(n - 1, 0, -1):
        ahead = (n - k - 1) / (n - 1)
        nxt = (1 / (k * lam) + ahead * nxt + with_n[k] / (n - 1)) / (1 / n + ahead + 1 / (n - 1))
        v_S[k] = nxt
    return RecursionSolution(v_S=tuple(v_S[1:]), v_n=with_n[0], v_Sn=tuple(with_n[1:]), v_A=v_A)


def solve_baseline(n: int, lam: float = 1.0) -> RecursionSolution:
    """Ages in the adversary-free complete graph; ``v_S`` runs over k = 1..n."""
    _check(n, lam, minimum=1)
    v_S = [0.0] * (n + 1)
    v_S[n] = 1 / lam
    for k in range(n - 1, 0, -1):
        cross = k * (n - k) * lam / (n - 1)
        v_S[k] = (1 + cross * v_S[k + 1]) / (k * lam / n + cross)
    return RecursionSolution(v_S=tuple(v_S[1:]))


def asymptotics(n: int, lam: float = 1.0, p: float = 1.0, q: float | None = None) -> dict:
    """Large-``n`` approximations and the bracket on ``v1`` for node capture.

    ``v1_p1`` and ``v1_p0`` are the regular-node ages for ``p = 1`` and
    ``p = 0``. ``lower`` and ``upper`` bracket ``v1`` for intermediate ``p``,
    using the exact ``v_n`` and the harmonic number in place of the
    logarithmic term.
    """
    _check(n, lam)
    h = harmonic(n - 1)
    v_n = solve_node_capture(n, lam, p, q).v_n
    return {
        "v1_p1": (h - (n - 1) / n) / lam + n / (2 * lam),
        "v1_p0": h / lam,
        "lower": p * v_n / 2,
        "upper": h / lam + p * v_n,
    }
