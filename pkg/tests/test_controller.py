from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from edgeoffload.controller import (
    LatencyRatioStrategy,
    OffloadConfig,
    OffloadState,
    control_step,
    decayed_ratio,
    latency_ratio,
    push_ratio,
    target_traffic,
    update_traffic,
)
from edgeoffload.metrics import LatencySample, LatencyWindow


def window_of(latencies, min_samples=10) -> LatencyWindow:
    w = LatencyWindow(window_length=1e9, min_samples=min_samples)
    for i, lat in enumerate(latencies):
        w.record(LatencySample(i * 0.01, lat))
    return w


def exact_decayed(history, c_decay, c_t):
    m = min(c_t, len(history) - 1)
    weights = [Fraction(c_decay) ** k for k in range(m + 1)]
    return float(sum(w * Fraction(r) for w, r in zip(weights, history)) / sum(weights))


# -- latency_ratio -----------------------------------------------------------

def test_ratio_of_constant_latencies_is_one():
    assert latency_ratio(window_of([0.4] * 20)) == 1.0


def test_ratio_one_to_hundred():
    # nearest rank: p95 = 95, p50 = 50
    assert latency_ratio(window_of([float(v) for v in range(1, 101)])) == pytest.approx(1.9, abs=1e-15)


def test_ratio_with_too_few_samples_is_neutral():
    assert latency_ratio(window_of([1.0, 5.0, 9.0], min_samples=10)) == 1.0


def test_degenerate_median_is_neutral(caplog):
    assert latency_ratio(window_of([0.0] * 12 + [3.0])) == 1.0
    assert "degenerate" in caplog.text


@given(st.lists(st.floats(1e-3, 1e3), min_size=10, max_size=100))
def test_ratio_at_least_one(latencies):
    assert latency_ratio(window_of(latencies)) >= 1.0


# -- decayed_ratio -----------------------------------------------------------

def test_decayed_single_term():
    assert decayed_ratio(OffloadState((3.7,)), OffloadConfig(c_decay=0.3)) == 3.7


def test_decayed_constant_history():
    assert decayed_ratio(OffloadState((2.5,) * 16), OffloadConfig()) == pytest.approx(2.5, rel=1e-15)


def test_decayed_worked_example():
    cfg = OffloadConfig(c_decay=0.5, c_t=1)
    assert exact_decayed([2.0, 4.0], 0.5, 1) == pytest.approx(8 / 3, rel=1e-15)
    assert decayed_ratio(OffloadState((2.0, 4.0)), cfg) == pytest.approx(8 / 3, rel=1e-15)


def test_decayed_empty_history_is_neutral():
    assert decayed_ratio(OffloadState(), OffloadConfig()) == 1.0


def test_decayed_only_uses_ct_plus_one_terms():
    cfg = OffloadConfig(c_decay=0.5, c_t=1)
    assert decayed_ratio(OffloadState((2.0, 4.0, 100.0)), cfg) == pytest.approx(8 / 3, rel=1e-15)


def test_ct_zero_is_latest_ratio():
    cfg = OffloadConfig(c_t=0)
    assert decayed_ratio(OffloadState((6.0, 1.0, 1.0)), cfg) == 6.0


@given(st.lists(st.floats(1, 50), min_size=1, max_size=20), st.floats(0.01, 1), st.integers(0, 20))
def test_decayed_is_convex_combination(history, c_decay, c_t):
    cfg = OffloadConfig(c_decay=c_decay, c_t=c_t)
    value = decayed_ratio(OffloadState(tuple(history)), cfg)
    used = history[: c_t + 1]
    assert min(used) * (1 - 1e-12) <= value <= max(used) * (1 + 1e-12)


# -- target_traffic ----------------------------------------------------------

def test_target_at_soft_limit_is_zero():
    cfg = OffloadConfig(c_soft=2.0, c_hard=4.0)
    assert target_traffic(2.0, cfg) == 0.0


def test_target_midpoint():
    assert target_traffic(3.0, OffloadConfig(c_soft=2.0, c_hard=4.0)) == 50.0


def test_target_above_hard_limit():
    assert target_traffic(5.0, OffloadConfig(c_soft=2.0, c_hard=4.0)) == 100.0


def test_target_at_hard_limit_interpolates_to_hundred():
    assert target_traffic(4.0, OffloadConfig(c_soft=2.0, c_hard=4.0)) == 100.0


@given(st.floats(0, 20), st.floats(0, 20))
def test_target_bounded_and_monotone(a, b):
    cfg = OffloadConfig(c_soft=1.5, c_hard=6.0)
    lo, hi = sorted((a, b))
    assert 0 <= target_traffic(lo, cfg) <= target_traffic(hi, cfg) <= 100


# -- update_traffic ----------------------------------------------------------

def test_initial_traffic_is_zero():
    assert OffloadState().traffic_pct == 0.0
    assert LatencyRatioStrategy().traffic_pct == 0.0


def test_update_from_zero():
    state = update_traffic(OffloadState(), 100.0, OffloadConfig(c_in=0.9))
    assert state.traffic_pct == pytest.approx(10.0, abs=1e-12)


def test_no_inertia_is_identity():
    assert update_traffic(OffloadState(traffic_pct=80.0), 30.0, OffloadConfig(c_in=0.0)).traffic_pct == 30.0


def test_geometric_convergence_matches_closed_form():
    cfg = OffloadConfig(c_in=0.8)
    v = 60.0
    state = OffloadState()
    for t in range(1, 60):
        state = update_traffic(state, v, cfg)
        assert abs(state.traffic_pct - v) == pytest.approx(0.8 ** t * v, rel=1e-9, abs=1e-12)


def test_update_rejects_out_of_range_target():
    with pytest.raises(ValueError):
        update_traffic(OffloadState(), 101.0, OffloadConfig())


# -- control_step ------------------------------------------------------------

def test_idle_system_never_offloads():
    cfg = OffloadConfig()
    state = OffloadState()
    for _ in range(200):
        state = control_step(state, LatencyWindow(), cfg)
    assert state.traffic_pct == 0.0


def test_sustained_overload_drives_traffic_to_hundred():
    cfg = OffloadConfig(c_soft=2.0, c_hard=5.0, c_in=0.9)
    # p95/p50 = 95/10 = 9.5 > c_hard
    latencies = [10.0] * 90 + [95.0] * 10
    window = window_of(latencies)
    assert latency_ratio(window) == 9.5
    state = OffloadState()
    for t in range(1, 100):
        state = control_step(state, window, cfg)
        assert 100 - state.traffic_pct == pytest.approx(100 * 0.9 ** t, rel=1e-9, abs=1e-9)


def test_spike_then_calm():
    cfg = OffloadConfig(c_decay=0.5, c_t=3, c_soft=2.0, c_hard=4.0, c_in=0.5)
    spike = window_of([1.0] * 90 + [10.0] * 10)  # ratio 10
    calm = window_of([1.0] * 100)  # ratio 1
    state = OffloadState()
    trace = []
    for window in [calm, spike] + [calm] * 14:
        state = control_step(state, window, cfg)
        trace.append(state.traffic_pct)
    # history is most recent first; the first calm tick contributes ratio 1
    assert trace[0] == 0.0
    # [10, 1]: (10 + .5)/1.5 = 7 -> target 100 -> R = 50
    assert trace[1] == pytest.approx(50.0)
    # [1, 10, 1]: 6.25/1.75 -> target 78.57 -> R = 64.29
    assert trace[2] == pytest.approx(0.5 * 50 + 0.5 * 100 * (6.25 / 1.75 - 2) / 2)
    # [1, 1, 10, 1]: 4.125/1.875 = 2.2 -> target 10 -> R = 37.14
    assert trace[3] == pytest.approx(0.5 * trace[2] + 0.5 * 10)
    assert max(trace) == trace[2]
    assert trace[-1] < 0.01
    assert all(b <= a for a, b in zip(trace[2:], trace[3:]))


def test_history_capacity():
    cfg = OffloadConfig(c_t=3)
    state = OffloadState()
    for r in range(10):
        state = push_ratio(state, float(r), cfg)
    assert state.ratio_history == (9.0, 8.0, 7.0, 6.0)


@pytest.mark.parametrize("kwargs", [
    dict(c_decay=0.0), dict(c_decay=1.5), dict(c_t=-1), dict(c_soft=5.0, c_hard=5.0),
    dict(c_in=1.0), dict(c_in=-0.1), dict(control_interval=0),
])
def test_invalid_config(kwargs):
    with pytest.raises(ValueError):
        OffloadConfig(**kwargs)


@settings(max_examples=200)
@given(
    st.floats(0.05, 1), st.integers(0, 20), st.floats(1.01, 3), st.floats(0.1, 5), st.floats(0, 0.99),
    st.lists(st.floats(1, 30), min_size=1, max_size=60),
)
def test_traffic_stays_in_range(c_decay, c_t, c_soft, gap, c_in, ratios):
    cfg = OffloadConfig(c_decay=c_decay, c_t=c_t, c_soft=c_soft, c_hard=c_soft + gap, c_in=c_in)
    state = OffloadState()
    for r in ratios:
        state = push_ratio(state, r, cfg)
        state = update_traffic(state, target_traffic(decayed_ratio(state, cfg), cfg), cfg)
        assert 0.0 <= state.traffic_pct <= 100.0
