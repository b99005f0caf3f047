import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gossip_timestomp.analytics import (
    asymptotics,
    harmonic,
    solve_baseline,
    solve_mitm,
    solve_node_capture,
)

from oracle import (
    baseline_transitions,
    capture_transitions,
    dense_ages,
    mitm_transitions,
)

PROBS = (0.0, 0.5, 1.0)


def rel(a, b):
    return abs(a - b) / abs(b)


# hand-solved small cases


def test_capture_n2_full_attack():
    sol = solve_node_capture(2, 1.0, 1.0, 1.0)
    assert sol.v_n == 2.0
    assert sol.v1 == pytest.approx((1 + 2) / (1 / 2 + 1), rel=1e-15)


def test_capture_n3_no_attack_effect():
    sol = solve_node_capture(3, 1.0, 0.0, 0.0)
    assert sol.v_S[1] == pytest.approx(1.5, rel=1e-14)
    assert sol.v1 == pytest.approx(2.1, rel=1e-14)
    assert sol.v_n == pytest.approx(2.325, rel=1e-14)


@pytest.mark.parametrize("n", [2, 7, 100, 12345])
@pytest.mark.parametrize("lam", [0.5, 1.0, 3.0])
def test_capture_q1_gives_isolated_infected_age(n, lam):
    assert solve_node_capture(n, lam, 1.0, 1.0).v_n == n / lam


def test_q_defaults_to_p():
    assert solve_node_capture(20, 1.0, 0.3) == solve_node_capture(20, 1.0, 0.3, 0.3)


def test_mitm_n2():
    sol = solve_mitm(2, 1.0)
    assert sol.v_A == 2.0
    assert sol.v_Sn == pytest.approx((2.0,))
    assert sol.v1 == pytest.approx(2.0)
    # node n averages its two inbound flows: A at rate 1 and node 1 at rate 1
    assert sol.v_n == pytest.approx((1 + 2 + 2) / 2)


def test_baseline_small():
    assert solve_baseline(1, 1.0).v1 == 1.0
    sol = solve_baseline(2, 1.0)
    assert sol.v_S == pytest.approx((4 / 3, 1.0))


def test_baseline_log_scaling_at_100():
    v1 = solve_baseline(100, 1.0).v1
    assert v1 == pytest.approx(5.151810163674707, rel=1e-12)
    assert 0.8 <= v1 / math.log(100) <= 1.6


def test_harmonic():
    assert harmonic(1) == 1.0
    assert harmonic(99) == pytest.approx(5.177377517639621, rel=1e-14)


def test_asymptotics_values():
    a = asymptotics(100, 1.0, 1.0)
    assert a["v1_p0"] == pytest.approx(5.177, abs=5e-4)
    assert a["v1_p1"] == pytest.approx(5.177377517639621 - 0.99 + 50, rel=1e-12)
    assert asymptotics(2, 1.0, 1.0)["v1_p0"] == 1.0


@pytest.mark.parametrize("n", [2, 5, 50])
def test_invalid_inputs(n):
    with pytest.raises(ValueError):
        solve_node_capture(n, 1.0, 1.5)
    with pytest.raises(ValueError):
        solve_node_capture(1, 1.0, 0.5)
    with pytest.raises(ValueError):
        solve_mitm(n, 0.0)
    with pytest.raises(ValueError):
        solve_baseline(0, 1.0)


# brute-force balance equations


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("p,q", list(itertools.product(PROBS, PROBS)))
@pytest.mark.parametrize("lam", [1.0, 2.5])
def test_capture_matches_dense(n, p, q, lam):
    regular = range(1, n)
    targets = [frozenset(s) for k in range(1, n) for s in itertools.combinations(regular, k)]
    ages = dense_ages(capture_transitions(n, lam, p, q), targets + [frozenset([n])])
    sol = solve_node_capture(n, lam, p, q)
    for target in targets:
        assert rel(sol.v_S[len(target) - 1], ages[target]) <= 1e-10
    assert rel(sol.v_n, ages[frozenset([n])]) <= 1e-10


@pytest.mark.parametrize("n", [2, 3, 4, 5])
@pytest.mark.parametrize("lam", [1.0, 0.7])
def test_mitm_matches_dense(n, lam):
    regular = range(1, n)
    sets = [frozenset(s) for k in range(1, n) for s in itertools.combinations(regular, k)]
    with_n = [s | {n} for s in sets]
    ages = dense_ages(mitm_transitions(n, lam), sets + with_n + [frozenset([n]), frozenset(["A"])])
    sol = solve_mitm(n, lam)
    for target in sets:
        assert rel(sol.v_S[len(target) - 1], ages[target]) <= 1e-10
    for target in with_n:
        assert rel(sol.v_Sn[len(target) - 2], ages[target]) <= 1e-10
    assert rel(sol.v_n, ages[frozenset([n])]) <= 1e-10
    assert rel(sol.v_A, ages[frozenset(["A"])]) <= 1e-10


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_baseline_matches_dense(n):
    users = range(1, n + 1)
    sets = [frozenset(s) for k in range(1, n + 1) for s in itertools.combinations(users, k)]
    ages = dense_ages(baseline_transitions(n, 1.0), sets)
    sol = solve_baseline(n, 1.0)
    for target in sets:
        assert rel(sol.v_S[len(target) - 1], ages[target]) <= 1e-10


# properties

ns = st.integers(min_value=2, max_value=400)
probs = st.floats(min_value=0.0, max_value=1.0)


@settings(max_examples=60, deadline=None)
@given(ns, probs, probs, st.floats(min_value=0.1, max_value=10.0))
def test_capture_sets_monotone_and_positive(n, p, q, lam):
    sol = solve_node_capture(n, lam, p, q)
    assert all(v > 0 for v in sol.v_S) and sol.v_n > 0
    assert all(a >= b * (1 - 1e-12) for a, b in zip(sol.v_S, sol.v_S[1:]))


@settings(max_examples=40, deadline=None)
@given(ns, st.floats(min_value=0.1, max_value=10.0))
def test_mitm_bounds(n, lam):
    sol = solve_mitm(n, lam)
    assert sol.v_A == n / lam
    assert min(sol.v_Sn) >= sol.v_A / 2
    assert sol.v1 >= sol.v_A / 4
    assert all(a >= b * (1 - 1e-12) for a, b in zip(sol.v_S, sol.v_S[1:]))


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=400))
def test_baseline_monotone(n):
    sol = solve_baseline(n, 1.0)
    assert all(a >= b for a, b in zip(sol.v_S, sol.v_S[1:]))
    assert sol.v_S[-1] == 1.0


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=100, max_value=3000), st.floats(min_value=0.01, max_value=0.99))
def test_intermediate_p_bracket(n, p):
    sol = solve_node_capture(n, 1.0, p)
    a = asymptotics(n, 1.0, p)
    assert a["lower"] <= sol.v1 <= harmonic(n - 1) + p * sol.v_n * 1.05


@pytest.mark.parametrize("n", [100, 300, 1000, 10_000])
def test_full_attack_close_to_asymptotic(n):
    v1 = solve_node_capture(n, 1.0, 1.0).v1
    assert rel(asymptotics(n, 1.0, 1.0)["v1_p1"], v1) <= 0.05


def test_partial_attack_recovers_at_large_n():
    big = solve_node_capture(10_000, 1.0, 0.99)
    assert big.v_n / big.v1 < 2
