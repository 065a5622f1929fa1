"""Invariants checked on generated inputs."""

import math

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from phasesched.core import JobState, PhaseKind, PhaseSpec, JobSpec, SpeedupFunction, SystemSnapshot, advance
from phasesched.engine import run
from phasesched.fast import simulate
from phasesched.schedulers import PolicyKind, PolicyParams, allocate, check_feasible

alphas = st.floats(1.05, 6.0)
positive = st.floats(1e-3, 1e3)
sizes = st.floats(0.05, 5.0)
kinds = st.sampled_from(list(PhaseKind))
policies = st.sampled_from(list(PolicyKind))


@st.composite
def params_st(draw):
    beta = draw(st.floats(0.05, 1.0))
    return PolicyParams(beta, beta * draw(st.floats(0.01, 0.99)), draw(st.floats(0.01, 0.99)))


params = params_st()


@st.composite
def jobs_st(draw, max_jobs=8):
    n = draw(st.integers(1, max_jobs))
    out = []
    for i in range(n):
        kind = draw(kinds)
        phases = []
        for _ in range(draw(st.integers(1, 4))):
            phases.append(PhaseSpec(kind, draw(sizes)))
            kind = kind.other()
        out.append(JobSpec(i, float(draw(st.integers(0, 6))), tuple(phases)))
    return out


@given(alphas, positive)
def test_p_times_q_is_identity(alpha, x):
    f = SpeedupFunction(alpha)
    assert math.isclose(f.p(x) * f.q(x), x, rel_tol=1e-12)
    assert math.isclose(f.p_inverse(f.p(x)), x, rel_tol=1e-9)


@given(alphas, positive, positive, st.floats(0.0, 1.0))
def test_p_concave_and_increasing(alpha, a, b, lam):
    f = SpeedupFunction(alpha)
    mid = lam * a + (1 - lam) * b
    assert f.p(mid) >= lam * f.p(a) + (1 - lam) * f.p(b) - 1e-9 * (1 + f.p(mid))
    lo, hi = min(a, b), max(a, b)
    assert f.p(lo) <= f.p(hi)


@given(policies, params, alphas, st.floats(1.0, 50.0), st.lists(kinds, min_size=1, max_size=25))
@settings(max_examples=300)
def test_allocations_feasible(kind, prm, alpha, N, job_kinds):
    f = SpeedupFunction(alpha)
    states = [JobState.fresh(JobSpec(i, float(i), (PhaseSpec(k, 1.0),))) for i, k in enumerate(job_kinds)]
    snap = SystemSnapshot.of(0.0, N, states)
    alloc = allocate(kind, snap, prm, f)
    assert check_feasible(alloc, snap, f)
    for j in snap.active:
        if j.is_inelastic:
            assert alloc.speed(j.id) <= 1 + 1e-12


@given(jobs_st(), st.floats(0.0, 1.0), st.floats(0.0, 4.0))
def test_advance_conserves_work(jobs, frac, duration):
    j = JobState.fresh(jobs[0])
    speed = frac * j.remaining_in_phase / max(duration, 1e-9)
    moved = advance(j, speed, duration)
    if moved.done:
        assert math.isclose(j.remaining_total, speed * duration, rel_tol=1e-9, abs_tol=1e-9)
    else:
        assert math.isclose(j.remaining_total - moved.remaining_total, speed * duration, rel_tol=1e-9, abs_tol=1e-9)


@given(jobs_st(), policies, params, st.sampled_from([1.0, 2.0, 3.5, 8.0]))
@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
def test_flow_time_equals_integral_of_active_count(jobs, kind, prm, N):
    tr = run(jobs, kind, prm, SpeedupFunction(2.0), N)
    assert len(tr.completions) == len(jobs)
    for j in jobs:
        assert tr.completions[j.id] >= j.arrival + j.inelastic_work - 1e-9
    assert math.isclose(tr.flow_time, tr.integral_n(), rel_tol=1e-9, abs_tol=1e-9)


@given(jobs_st(), policies, params, st.sampled_from([1.0, 2.0, 3.5, 8.0]), st.sampled_from([1.5, 2.0, 3.0]))
@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
def test_kernel_matches_engine(jobs, kind, prm, N, alpha):
    f = SpeedupFunction(alpha)
    ref = run(jobs, kind, prm, f, N)
    got = simulate(jobs, kind, prm, f, N).completions()
    for j in jobs:
        want = ref.completions[j.id]
        assert abs(got[j.id] - want) <= 1e-9 * max(1.0, want)
