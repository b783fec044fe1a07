import math

import pytest

from hetq.errors import DegenerateTrace, IncompleteJob, InsufficientData, NonPositiveWindow
from hetq.metrics import (
    JOB_COLUMNS,
    JobSummary,
    MetricsRecorder,
    drain_slopes,
    job_row,
    least_squares_slope,
    littles_law_check,
    occupancy_estimate,
    traffic_intensity_series,
)
from hetq.network import Job, Network, SimConfig, WorkloadConfig


def finished_job(**stamps):
    job = Job(7, 3, stamps.get("created_at", 0.0))
    job.enqueued_at = stamps.get("enqueued_at", 0.05)
    job.dispatched_at = stamps.get("dispatched_at", 0.5)
    job.server_id = stamps.get("server_id", 1)
    job.service_end = stamps.get("service_end", 1.0)
    job.response_at = stamps.get("response_at", 1.05)
    job.load_at_enqueue = 2
    return job


def scripted_network(fixed, period=None):
    wl = WorkloadConfig((1.0,), propagation_delay_mean=0.0, propagation_jitter=0.0)
    return Network(SimConfig(2.0, 1.0, wl, fixed_service=fixed, load_sample_period=period))


# --- per-job records ---------------------------------------------------------

def test_job_row_fields():
    row = dict(zip(JOB_COLUMNS, job_row(finished_job())))
    assert row["queue_wait"] == pytest.approx(0.45)
    assert row["rtt"] == pytest.approx(1.05)
    assert row["server_id"] == 1 and row["client_id"] == 3 and row["load_at_enqueue"] == 2


def test_record_job_rejects_missing_timestamps():
    rec = MetricsRecorder()
    job = finished_job()
    job.service_end = None
    with pytest.raises(IncompleteJob):
        rec.record_job(job)
    with pytest.raises(IncompleteJob):
        rec.record_job(finished_job(dispatched_at=2.0))  # dispatched after service end
    rec.record_job(finished_job())
    assert rec.recorded == 1 and len(rec.jobs) == 1


def test_record_job_streams_to_sink():
    rows = []
    rec = MetricsRecorder(job_sink=rows.append)
    rec.record_job(finished_job())
    assert rec.jobs == [] and len(rows) == 1


# --- load samples ------------------------------------------------------------

def test_load_counts_arrivals_minus_departures():
    net = scripted_network(fixed=(0.2, 100.0), period=1.0)
    for _ in range(22):
        net.submit(0, 0.9)
    for k in range(10):
        net.submit(0, 1.05 + 0.1 * k)
    net.run(2.5, clients=False)
    by_time = {round(s.time, 9): s for s in net.recorder.load}
    # 22 arrive at 0.9, two go straight into service: 20 waiting at t = 1
    assert by_time[1.0].queue_length == 20
    # 10 more arrive and five fast completions each pull one job from the queue
    assert by_time[2.0].queue_length == 25
    assert by_time[2.0].jobs_in_system == 27


def test_load_non_increasing_without_arrivals():
    net = scripted_network(fixed=(0.3, 0.7), period=0.5)
    for _ in range(30):
        net.submit(0, 0.0)
    net.run(20.0, clients=False)
    q = [s.queue_length for s in net.recorder.load if s.time > 0]
    assert all(a >= b for a, b in zip(q, q[1:]))
    assert q[-1] == 0


def test_drain_slope_matches_service_capacity():
    net = Network(
        SimConfig(
            2.0,
            1.0,
            WorkloadConfig((5.0,), session_on=500.0, session_off=500.0),
            load_sample_period=1.0,
        )
    )
    net.run(2000.0)
    offs = list(zip(net.session_ends, net.session_starts[1:]))
    slopes = drain_slopes(net.recorder.load, offs)
    assert slopes
    for s in slopes:
        assert s == pytest.approx(-3.0, rel=0.15)


def test_least_squares_slope():
    assert least_squares_slope([0, 1, 2, 3], [1, 3, 5, 7]) == pytest.approx(2.0)
    with pytest.raises(InsufficientData):
        least_squares_slope([1.0], [1.0])


# --- windowed traffic intensity ----------------------------------------------

def test_rho_window_ratio():
    (s,) = traffic_intensity_series([0.1, 0.2, 0.3, 0.4], [0.5, 0.6], 1.0, t_end=1.0)
    assert (s.lambda_hat, s.mu_hat, s.rho_hat, s.sentinel_flag) == (4.0, 2.0, 2.0, False)


def test_rho_sentinel_when_nothing_completes():
    (s,) = traffic_intensity_series([0.1, 0.2], [], 1.0, sentinel_cap=1e9, t_end=1.0)
    assert s.rho_hat == 1e9 and s.sentinel_flag
    assert math.isfinite(s.rho_hat)


def test_rho_empty_window_is_zero():
    series = traffic_intensity_series([], [0.5], 1.0, t_end=2.0)
    assert [(s.rho_hat, s.sentinel_flag) for s in series] == [(0.0, False), (0.0, False)]


def test_rho_windows_partition_horizon():
    series = traffic_intensity_series([0.5, 1.5, 2.2], [1.7, 2.4], 1.0, t_end=2.5)
    assert [s.window_end for s in series] == [1.0, 2.0, 2.5]
    assert series[-1].lambda_hat == pytest.approx(2.0)  # one arrival over half a window
    assert series[0].sentinel_flag and not series[1].sentinel_flag


@pytest.mark.parametrize("window", [0.0, -1.0])
def test_rho_non_positive_window(window):
    with pytest.raises(NonPositiveWindow):
        traffic_intensity_series([0.1], [0.2], window, t_end=1.0)


def test_rho_zero_horizon_is_empty():
    assert traffic_intensity_series([], [], 1.0, t_end=0.0) == []


# --- occupancy ---------------------------------------------------------------

def test_occupancy_time_weights():
    trace = [(0.0, (0, 0)), (1.0, (1, 0)), (3.0, (1, 1)), (3.5, (0, 0))]
    dist = occupancy_estimate(trace, 4.0)
    assert dist.p(0, 0) == pytest.approx(1.5 / 4)
    assert dist.p(1, 0) == pytest.approx(0.5)
    assert dist.p(1, 1) == pytest.approx(0.125)
    assert dist.total() == pytest.approx(1.0)
    assert dist.source == "simulation-occupancy"


def test_occupancy_discards_warmup():
    trace = [(0.0, (2, 1)), (5.0, (0, 0))]
    dist = occupancy_estimate(trace, 10.0, warmup=4.0)
    assert dist.p(2, 1) == pytest.approx(1 / 6)
    assert dist.p(0, 0) == pytest.approx(5 / 6)


def test_occupancy_degenerate():
    with pytest.raises(DegenerateTrace):
        occupancy_estimate([(0.0, (0, 0))], 0.0)
    with pytest.raises(DegenerateTrace):
        occupancy_estimate([], 5.0)


def test_occupancy_close_to_closed_form():
    from hetq.analytic import stationary_distribution
    from hetq.model import ModelParams

    net = Network(SimConfig(2.0, 1.0, WorkloadConfig((1.0,)), warmup=1000.0, load_sample_period=None))
    net.run(1e5)
    sim = net.occupancy()
    exact = stationary_distribution(ModelParams(1.0, 2.0, 1.0), 1)
    for n1, n2 in ((0, 0), (1, 0), (0, 1), (1, 1)):
        assert sim.p(n1, n2) == pytest.approx(exact.p(n1, n2), abs=0.01)


# --- Little's law ------------------------------------------------------------

def test_littles_law_hand_trace():
    net = scripted_network(fixed=(1.0, 2.0))
    for t in (0.0, 0.1, 0.2):
        net.submit(0, t)
    net.run(3.0, clients=False)
    occ = net.occupancy()
    L = sum((s.n1 + s.n2) * p for s, p in occ.entries)
    summary = JobSummary.of(net.recorder.jobs, 0.0, 3.0)
    assert summary.sum_sojourn == pytest.approx(4.8)
    assert L == pytest.approx(1.6)
    assert littles_law_check(net.recorder.jobs, occ, start=0.0, end=3.0, min_jobs=1) == pytest.approx(0.0, abs=1e-12)


def test_littles_law_needs_enough_jobs():
    net = scripted_network(fixed=(1.0, 2.0))
    net.submit(0, 0.0)
    net.run(3.0, clients=False)
    with pytest.raises(InsufficientData):
        littles_law_check(net.recorder.jobs, net.occupancy(), start=0.0, end=3.0)


def test_littles_law_long_run():
    net = Network(SimConfig(2.0, 1.0, WorkloadConfig((1.5,)), warmup=500.0, load_sample_period=None))
    net.run(5e4)
    disc = littles_law_check(net.recorder.summary, net.occupancy(), start=500.0, end=5e4)
    assert disc < 0.01


def test_overload_wait_grows():
    net = Network(SimConfig(2.0, 1.0, WorkloadConfig((4.0,)), load_sample_period=None))
    net.run(1000.0)
    jobs = sorted(net.recorder.jobs, key=lambda j: j.enqueued_at)
    slope = least_squares_slope([j.enqueued_at for j in jobs], [j.queue_wait for j in jobs])
    assert slope > 0
