from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from edgeoffload.network import Link, LinkSpec, offload_latency, transfer_time

MB = 1_000_000


def fifo_oracle(jobs, bandwidth):
    """Finish times for (enqueue_time, bytes) jobs on one FIFO pipe."""
    free, out = 0.0, []
    for now, nbytes in jobs:
        free = max(free, now) + nbytes / bandwidth
        out.append(free)
    return out


def test_zero_bytes_on_idle_link():
    assert transfer_time(Link(), 0, 3.0) == 3.0


def test_zero_bytes_on_busy_link_waits_for_pipe():
    link = Link()
    link.transfer_time(50 * MB, 0.0)
    assert link.transfer_time(0, 0.1) == pytest.approx(0.5)


def test_hundred_megabytes_take_one_second():
    assert Link(LinkSpec(bandwidth=100 * MB)).transfer_time(100 * MB, 0.0) == pytest.approx(1.0)


def test_back_to_back_transfers_queue():
    link = Link(LinkSpec(bandwidth=100 * MB))
    assert link.transfer_time(50 * MB, 0.0) == pytest.approx(0.5)
    assert link.transfer_time(50 * MB, 0.0) == pytest.approx(1.0)


def test_offload_latency_components():
    link = Link(LinkSpec(rtt=0.05, bandwidth=100 * MB))
    latency, timing = offload_latency(link, 1 * MB, 1 * MB, 0.1, 0.0)
    assert latency == pytest.approx(0.01 + 0.025 + 0.1 + 0.01 + 0.025)
    assert latency == pytest.approx(0.17)
    assert timing.service_s == 0.1


def test_offload_with_no_network_cost_is_service_time():
    link = Link(LinkSpec(rtt=0.0, bandwidth=1e300))
    assert offload_latency(link, 0, 0, 0.3, 5.0)[0] == 0.3
    assert offload_latency(link, 10 * MB, 10 * MB, 0.3, 6.0)[0] == pytest.approx(0.3)


def test_saturated_link_latency_grows():
    link = Link(LinkSpec(bandwidth=10 * MB))
    latencies = [offload_latency(link, 2 * MB, 0, 0.0, t * 0.1)[0] for t in range(100)]
    assert all(b > a for a, b in zip(latencies, latencies[1:]))


def test_independent_pipes_do_not_interfere():
    link = Link(LinkSpec(bandwidth=100 * MB, shared=False))
    link.transfer_time(100 * MB, 0.0, "up")
    assert link.transfer_time(50 * MB, 0.0, "down") == pytest.approx(0.5)


def test_shared_pipe_serializes_directions():
    link = Link(LinkSpec(bandwidth=100 * MB, shared=True))
    link.transfer_time(100 * MB, 0.0, "up")
    assert link.transfer_time(50 * MB, 0.0, "down") == pytest.approx(1.5)


def test_negative_size_rejected():
    with pytest.raises(ValueError):
        Link().transfer_time(-1, 0.0)


@pytest.mark.parametrize("kwargs", [dict(rtt=-1), dict(bandwidth=0)])
def test_invalid_spec(kwargs):
    with pytest.raises(ValueError):
        LinkSpec(**kwargs)


@given(st.lists(st.tuples(st.floats(0, 5), st.integers(0, 20 * MB)), min_size=1, max_size=60))
def test_matches_fifo_oracle(jobs):
    jobs = sorted(jobs, key=lambda j: j[0])
    link = Link(LinkSpec(bandwidth=100 * MB))
    got = [link.transfer_time(n, t) for t, n in jobs]
    assert got == pytest.approx(fifo_oracle(jobs, 100 * MB), rel=1e-12)


@given(st.lists(st.tuples(st.floats(0, 10), st.integers(1, 60 * MB)), min_size=1, max_size=80))
def test_throughput_never_exceeds_bandwidth(jobs):
    bw = 100 * MB
    link = Link(LinkSpec(bandwidth=bw))
    for t, n in sorted(jobs):
        link.transfer_time(n, t)
    series = link.throughput_series(link.busy_until() + 1, 1.0)
    assert all(rate <= bw * (1 + 1e-9) for _, rate in series)
    assert sum(rate for _, rate in series) == pytest.approx(link.bytes_moved, rel=1e-9)


def test_busy_second_is_fully_utilized():
    link = Link(LinkSpec(bandwidth=100 * MB))
    rng = random.Random(0)
    t = 0.0
    while t < 5:
        link.transfer_time(rng.randint(1, 8) * MB, t)
        t += 0.01
    assert link.throughput(1.0, 2.0) == pytest.approx(100 * MB)
