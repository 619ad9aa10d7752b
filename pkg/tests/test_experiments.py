"""Experiment drivers: routing, failure capture, threading, endpoint values."""

import math

import numpy as np
import pytest

from sglab import experiments
from sglab.errors import ConfigError
from sglab.schemas import (
    BoundsRequest,
    LateGapRequest,
    LocalizeRequest,
    MidSpectrumRequest,
    MinGapRequest,
    NeighborStatsRequest,
    SpectrumRequest,
)


def test_spectrum_identity_closed_form():
    resp = experiments.run_spectrum(
        SpectrumRequest(n=4, perm="identity", s_grid=(0.0, 1.0, 5), levels=6))
    assert not resp.failures
    for row in resp.rows:
        g = math.sqrt(row.s ** 2 + (1 - row.s) ** 2)
        eps = 0.5 * (1.0 - g)
        stack = sorted(4 * eps + m * g
                       for m in range(5) for _ in range(math.comb(4, m)))
        assert row.energy == pytest.approx(stack[row.level], abs=1e-8)


def test_spectrum_s_columns_at_endpoints():
    resp = experiments.run_spectrum(
        SpectrumRequest(n=6, seed=9, s_grid=(0.0, 1.0, 2), levels=8))
    head = [r.energy for r in resp.rows if r.s == 0.0]
    tail = [r.energy for r in resp.rows if r.s == 1.0]
    # both endpoint spectra open 0, then 1 six-fold, then the weight-2 level
    assert np.allclose(head, [0.0] + [1.0] * 6 + [2.0], atol=1e-8)
    assert np.allclose(tail, [0.0] + [1.0] * 6 + [2.0], atol=1e-10)


def test_threaded_run_matches_serial():
    req = dict(n_list=[5, 6], seeds=(0, 2))
    serial = experiments.run_min_gap(MinGapRequest(**req, threads=1))
    threaded = experiments.run_min_gap(MinGapRequest(**req, threads=4))
    assert [r.model_dump() for r in serial.rows] == \
           [r.model_dump() for r in threaded.rows]
    assert serial.summaries == threaded.summaries


def test_thread_count_env(monkeypatch):
    monkeypatch.delenv(experiments.THREADS_ENV, raising=False)
    assert experiments._thread_count(None) == 1
    assert experiments._thread_count(3) == 3
    monkeypatch.setenv(experiments.THREADS_ENV, "2")
    assert experiments._thread_count(None) == 2
    monkeypatch.setenv(experiments.THREADS_ENV, "zero")
    with pytest.raises(ConfigError):
        experiments._thread_count(None)
    monkeypatch.setenv(experiments.THREADS_ENV, "0")
    with pytest.raises(ConfigError):
        experiments._thread_count(None)


def test_per_point_failures_do_not_abort():
    # dense mid-spectrum route is capped at n=13; each grid point reports
    resp = experiments.run_mid_spectrum(
        MidSpectrumRequest(n=14, seed=0, s_grid=(0.4, 0.6, 3)))
    assert resp.rows == []
    assert len(resp.failures) == 3
    assert "n=13" in resp.failures[0]


def test_min_gap_summaries():
    resp = experiments.run_min_gap(MinGapRequest(n_list=[4], seeds=(0, 4),
                                                 perm="identity"))
    s = resp.summaries[0]
    assert s.seeds == 5
    assert s.median_gap == pytest.approx(math.sqrt(0.5), abs=1e-8)
    assert s.q1_gap <= s.median_gap <= s.q3_gap


def test_localize_endpoints():
    resp = experiments.run_localize(
        LocalizeRequest(n=6, seed=2, s_grid=(0.0, 1.0, 3)))
    first, mid, last = resp.rows
    assert first.overlap_uniform == pytest.approx(1.0, abs=1e-9)
    assert first.ipr == pytest.approx(2.0 ** -6, abs=1e-9)
    assert last.overlap_target == pytest.approx(1.0, abs=1e-9)
    assert last.ipr == pytest.approx(1.0, abs=1e-9)
    assert 0.0 <= mid.overlap_uniform <= 1.0
    assert 2.0 ** -6 - 1e-12 <= mid.ipr <= 1.0


def test_bounds_report_fields():
    resp = experiments.run_bounds(BoundsRequest(n=12, seed=1, s_grid=(0.0, 1.0, 5)))
    assert resp.trial_error is None
    for row in resp.rows:
        assert row.upper_ok
        assert row.ground <= row.upper + 1e-10
        if row.lower is not None:
            assert row.lower <= row.ground + 1e-10
            assert row.k == math.ceil(2 * math.sqrt(12))


def test_bounds_trial_error_reported_not_fatal():
    resp = experiments.run_bounds(BoundsRequest(n=6, seed=0, s_grid=(0.0, 1.0, 3)))
    assert resp.trial_error is not None
    assert "lam*n" in resp.trial_error
    assert len(resp.rows) == 3
    assert all(row.lower is None for row in resp.rows)


def test_late_gap_rows():
    resp = experiments.run_late_gap(LateGapRequest(n=8, seed=3, s_grid=(0.9, 1.0, 3)))
    assert resp.c == pytest.approx(0.106739, abs=1e-5)
    last = resp.rows[-1]
    assert last.s == 1.0
    assert last.gap == pytest.approx(1.0, abs=1e-9)
    assert last.excited_lower == 1.0 and last.gap_lower == 1.0
    for row in resp.rows:
        if row.gap_lower is not None:
            assert row.gap >= row.gap_lower - 1e-9
    assert resp.min_gap == min(r.gap for r in resp.rows)


def test_late_gap_below_validity_threshold():
    # early grid points sit under s = 1/(1+2c): measured gap only
    resp = experiments.run_late_gap(
        LateGapRequest(n=6, seed=0, s_grid=(0.6, 1.0, 5), entropy_target=0.49))
    assert resp.rows[0].excited_lower is None
    assert resp.rows[0].gap > 0
    assert resp.rows[-1].excited_lower == 1.0


def test_neighbor_stats_full_set_always_hits():
    resp = experiments.run_neighbor_stats(
        NeighborStatsRequest(n=6, k=2, trials=10, gamma=1.0))
    assert resp.set_size == 64
    assert resp.empirical_p == 1.0
    assert resp.empirical_q == 1.0


def test_neighbor_stats_cost_cutoff_path():
    resp = experiments.run_neighbor_stats(
        NeighborStatsRequest(n=10, k=8, trials=5, c=0.25))
    assert resp.set_size == 56
    assert resp.gamma_effective == pytest.approx(math.log2(56) / 10)
    assert 0.0 <= resp.empirical_p <= 1.0
    assert 0 <= resp.count_q <= 5


def test_meta_echo_reconstructs_request():
    req = SpectrumRequest(n=5, seed=7, s_grid=(0.0, 1.0, 3), levels=4)
    resp = experiments.run_spectrum(req)
    again = SpectrumRequest(**resp.meta.config)
    assert again == req
    assert resp.meta.generator == "philox4x64/fisher-yates-1"
