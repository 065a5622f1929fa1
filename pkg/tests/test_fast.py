"""The compiled kernels against the reference engine, job by job."""

import numpy as np
import pytest

from phasesched.core import SpeedupFunction
from phasesched.engine import run
from phasesched.fast import simulate
from phasesched.schedulers import PolicyKind, PolicyParams
from phasesched.workload import StochasticConfig, generate_stochastic, small_random_workload

from conftest import E, I, job

F2 = SpeedupFunction(2.0)


def _compare(jobs, kind, params, f, N, large_min):
    ref = run(jobs, kind, params, f, N)
    fast = simulate(jobs, kind, params, f, N, large_min=large_min)
    got = fast.completions()
    for j in jobs:
        want = ref.completions[j.id]
        assert abs(got[j.id] - want) <= 1e-9 * max(1.0, want), (kind, j.id, got[j.id], want)
    return fast


@pytest.mark.parametrize("kind", list(PolicyKind))
@pytest.mark.parametrize("large_min", [1, 64])
def test_kernels_match_engine_small(kind, large_min):
    for seed in range(25):
        jobs = small_random_workload(100 + seed, 1 + seed % 20, max_arrival=5)
        N = float(1 + seed % 6) + (0.5 if seed % 4 == 0 else 0.0)
        params = PolicyParams(beta=(0.3, 0.75, 1.0)[seed % 3], theta=0.2, delta=0.3)
        f = SpeedupFunction((1.5, 2.0, 3.0)[seed % 3])
        _compare(jobs, kind, params, f, N, large_min)


@pytest.mark.parametrize("kind", list(PolicyKind))
def test_kernels_match_engine_busy_system(kind):
    # enough backlog for the suffix kernel to enter its bulk mode
    cfg = StochasticConfig(arrival_rate=3.0, horizon_slots=40, mean_phases=4, mean_phase_size=2.0, seed=9)
    jobs = generate_stochastic(cfg)
    fast = _compare(jobs, kind, PolicyParams(0.75, 0.25), F2, 4.0, 8)
    assert fast.peak_jobs > 8


def test_fast_result_summary():
    res = simulate([job(0, 0, (E, 8)), job(1, 0, (I, 1))], PolicyKind.PA_EQUI, PolicyParams(), F2, 5.0)
    assert res.n_jobs == 2
    assert res.flow_time == pytest.approx(np.sum(res.completion))
    assert res.mean_flow_time == pytest.approx(res.flow_time / 2)


def test_fast_empty():
    res = simulate([], PolicyKind.PA_EQUI, PolicyParams(), F2, 5.0)
    assert res.n_jobs == 0 and res.flow_time == 0.0
    with pytest.raises(ValueError):
        res.mean_flow_time


def test_fast_rejects_bad_servers():
    with pytest.raises(ValueError):
        simulate([job(0, 0, (E, 1))], PolicyKind.INELASTIC_FIRST, PolicyParams(), F2, 0.5)
