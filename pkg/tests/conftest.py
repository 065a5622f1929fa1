import pytest

from phasesched.core import JobSpec, JobState, PhaseKind, PhaseSpec, SpeedupFunction, SystemSnapshot

E = PhaseKind.ELASTIC
I = PhaseKind.INELASTIC


def job(job_id, arrival, *phases):
    """``job(0, 0.0, (E, 2), (I, 1))``"""
    return JobSpec(job_id, float(arrival), tuple(PhaseSpec(k, float(s)) for k, s in phases))


def snapshot(servers, kinds, time=0.0):
    """Snapshot with one fresh single-phase job per kind, job ``i`` arriving at time ``i``."""
    states = [JobState.fresh(job(i, i, (k, 1.0))) for i, k in enumerate(kinds)]
    return SystemSnapshot.of(time, servers, states)


@pytest.fixture
def f2():
    return SpeedupFunction(2.0)


# tiny instances for the brute-force optimum: (name, jobs, servers, grid, dt)
ORACLE_FIXTURES = {
    "single": ([job(0, 0, (E, 4))], 4.0, 1.0, 0.25),
    "pair": ([job(0, 0, (E, 2)), job(1, 0, (E, 2))], 1.0, 0.125, 0.125),
    "mixed": (
        [job(0, 0, (E, 0.5), (I, 0.25)), job(1, 0, (I, 0.5)), job(2, 0.25, (E, 0.5))],
        2.0,
        0.5,
        0.125,
    ),
}

_oracle_cache = {}


def oracle_result(name):
    from phasesched.analysis.oracle import brute_force_opt

    if name not in _oracle_cache:
        jobs, N, grid, dt = ORACLE_FIXTURES[name]
        _oracle_cache[name] = brute_force_opt(jobs, N, SpeedupFunction(2.0), grid, dt)
    return _oracle_cache[name]


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def record_acceptance(number, passed, detail):
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
