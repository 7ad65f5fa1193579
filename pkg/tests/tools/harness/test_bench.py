from __future__ import annotations

import pytest

from failsafe_channels.tools.harness.bench import BenchResult, bench_realtime, bench_sweep, bench_throughput


def test_bench_throughput_small():
    """A handful of full exchanges complete and are timed"""
    result = bench_throughput(5)

    assert result.payments == 5
    assert result.seconds > 0
    assert result.per_exchange == pytest.approx(result.seconds / 5)
    assert result.mode == "sequential"


def test_bench_rejects_zero():
    """At least one payment"""
    with pytest.raises(ValueError):
        bench_throughput(0)
    with pytest.raises(ValueError):
        bench_realtime(0)


def test_bench_sweep_sizes():
    """One result per requested size"""
    results = bench_sweep([1, 3])

    assert [result.payments for result in results] == [1, 3]


def test_bench_realtime_mines_while_paying():
    """Concurrent actors finish every exchange while blocks keep coming"""
    result = bench_realtime(3, block_interval=0.001)

    assert result.mode == "realtime"
    assert result.payments == 3
    assert result.blocks >= 1


def test_bench_result_rates():
    """Zero durations do not divide by zero"""
    assert BenchResult(10, 0.0).per_second == 0.0
    assert BenchResult(10, 2.0).per_second == 5.0


@pytest.mark.slow
def test_bench_ten_thousand_payments():
    """10^4 exchanges stay well below a second each"""
    result = bench_throughput(10_000)

    assert result.per_exchange < 1.0
