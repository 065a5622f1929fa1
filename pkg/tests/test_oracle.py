import math

import pytest

from phasesched.analysis.oracle import (
    InstanceTooLarge,
    brute_force_opt,
    discretized_opt,
    empirical_ratio,
    opt_lower_bound,
)
from phasesched.core import SpeedupFunction
from phasesched.engine import run
from phasesched.schedulers import PolicyKind, PolicyParams

from conftest import E, I, ORACLE_FIXTURES, job, oracle_result

F2 = SpeedupFunction(2.0)


def test_lower_bound_formula():
    jobs = [job(0, 0, (E, 4), (I, 1)), job(1, 3, (I, 2))]
    assert opt_lower_bound(jobs, 4.0, F2) == pytest.approx(4 / 2 + 1 + 2)
    assert opt_lower_bound([], 4.0, F2) == 0.0


def test_single_job_fixture():
    r = oracle_result("single")
    assert r.coarse == pytest.approx(2.0) and r.refined == pytest.approx(2.0)
    tr = run(ORACLE_FIXTURES["single"][0], PolicyKind.PA_EQUI, PolicyParams(), F2, 4.0)
    assert abs(tr.flow_time - r.refined) <= r.slack + 1e-9


def test_pair_fixture_beats_both_simple_schedules():
    r = oracle_result("pair")
    equal_split = 4 * math.sqrt(2)
    serial = 2 + 4
    assert r.refined < equal_split < serial
    # unequal split x = 3/4 is optimal among two-stage schedules: 2 + 2 sqrt(3)
    assert r.refined == pytest.approx(2 + 2 * math.sqrt(3), rel=0.01)
    assert r.refined >= 2 + 2 * math.sqrt(3) - 1e-9


@pytest.mark.parametrize("name", list(ORACLE_FIXTURES))
def test_fixture_convergence(name):
    r = oracle_result(name)
    assert r.relative_change < 0.02
    jobs, N, _, _ = ORACLE_FIXTURES[name]
    assert r.lower >= opt_lower_bound(jobs, N, F2) - 1e-12
    assert r.lower <= r.upper


def test_oracle_never_beats_lower_bound():
    jobs, N, grid, dt = ORACLE_FIXTURES["mixed"]
    assert discretized_opt(jobs, N, F2, grid, dt) >= opt_lower_bound(jobs, N, F2)


def test_oracle_not_above_any_policy():
    jobs, N, _, _ = ORACLE_FIXTURES["mixed"]
    r = oracle_result("mixed")
    for kind in PolicyKind:
        tr = run(jobs, kind, PolicyParams(0.5, 0.25), F2, N)
        assert r.refined <= tr.flow_time * 1.02


def test_size_guards():
    four = [job(i, 0, (E, 1)) for i in range(4)]
    with pytest.raises(InstanceTooLarge):
        brute_force_opt(four, 1.0, F2, 0.5, 0.5)
    big = [job(i, 0, (E, 50)) for i in range(3)]
    with pytest.raises(InstanceTooLarge):
        discretized_opt(big, 8.0, F2, 0.125, 0.01)
    with pytest.raises(ValueError):
        discretized_opt([job(0, 0, (E, 1))], 1.0, F2, 2.0, 0.5)


def test_empirical_ratio():
    jobs = [job(0, 0, (E, 4))]
    tr = run(jobs, PolicyKind.FRACTIONAL_LCFS, PolicyParams(), F2, 4.0)
    assert empirical_ratio(tr.flow_time, jobs, 4.0, F2) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        empirical_ratio(0.0, [], 4.0, F2)
    r = oracle_result("pair")
    pair = ORACLE_FIXTURES["pair"][0]
    eq = run(pair, PolicyKind.PA_EQUI, PolicyParams(), F2, 1.0)
    loose = empirical_ratio(eq.flow_time, pair, 1.0, F2)
    tight = empirical_ratio(eq.flow_time, pair, 1.0, F2, r)
    assert tight <= loose
    assert tight >= eq.flow_time / r.refined - 1e-12
