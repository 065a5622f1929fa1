import math
import random

import pytest

from phasesched.core import Allocation, JobState, Share, SpeedupFunction, SystemSnapshot
from phasesched.schedulers import (
    EmptySnapshotError,
    PolicyKind,
    PolicyParams,
    allocate,
    blind_equi,
    check_feasible,
    fractional_lcfs,
    inelastic_first,
    lcfs_case,
    pa_equi,
    pa_equi_case,
    pa_fcfs,
)

from conftest import E, I, job, snapshot

F2 = SpeedupFunction(2.0)


def speeds(alloc, snap):
    return [alloc.speed(j.id) for j in snap.active]


# -- Fractional-LCFS --------------------------------------------------------


def test_lcfs_case_one():
    snap = snapshot(4, [E] * 10)
    alloc = fractional_lcfs(snap, PolicyParams(0.5, 0.25), F2)
    assert lcfs_case(snap, PolicyParams(0.5, 0.25)) == "I"
    assert speeds(alloc, snap) == [0.0] * 5 + [pytest.approx(math.sqrt(0.8))] * 5
    assert check_feasible(alloc, snap, F2)


def test_lcfs_case_two_a():
    # oldest two in-elastic, newest two elastic
    snap = snapshot(10, [I, I, E, E])
    p = PolicyParams(0.5, 0.25)
    assert lcfs_case(snap, p) == "IIa"
    alloc = fractional_lcfs(snap, p, F2)
    assert speeds(alloc, snap) == [1.0, 1.0, 0.0, pytest.approx(math.sqrt(8))]


def test_lcfs_case_two_b():
    snap = snapshot(10, [E, E, E, E])
    p = PolicyParams(0.5, 0.25)
    assert lcfs_case(snap, p) == "IIb"
    alloc = fractional_lcfs(snap, p, F2)
    assert speeds(alloc, snap) == [0.0, 0.0, pytest.approx(math.sqrt(5))] * 1 + [pytest.approx(math.sqrt(5))]


def test_lcfs_case_two_b_idles_inelastic_in_window():
    # n_i = 1 < ceil(0.4 * 4) = 2, so IIb: the newest in-elastic job in the window idles
    snap = snapshot(10, [E, E, E, I])
    p = PolicyParams(0.5, 0.4)
    assert lcfs_case(snap, p) == "IIb"
    alloc = fractional_lcfs(snap, p, F2)
    assert speeds(alloc, snap) == [0.0, 0.0, pytest.approx(math.sqrt(5)), 0.0]


def test_lcfs_case_two_a_picks_most_recent_inelastic():
    snap = snapshot(2, [I, I, I, E, E, E])
    p = PolicyParams(0.5, 0.25)
    assert lcfs_case(snap, p) == "I"  # 2 / 3 < 1
    snap = snapshot(4, [I, I, I, E, E, E])
    p = PolicyParams(0.5, 0.25)
    assert lcfs_case(snap, p) == "IIa"
    alloc = fractional_lcfs(snap, p, F2)
    # c = min(3, 4) = 3, elastic: ceil(1.5)=2 newest at P(1/2)
    assert speeds(alloc, snap) == [1.0, 1.0, 1.0, 0.0] + [pytest.approx(math.sqrt(0.5))] * 2


def test_lcfs_inelastic_count_capped_by_servers():
    snap = snapshot(2.5, [I, I, I, I])
    p = PolicyParams(0.5, 0.25)
    alloc = fractional_lcfs(snap, p, F2)
    assert speeds(alloc, snap) == [0.0, 0.0, 1.0, 1.0]
    assert check_feasible(alloc, snap, F2)


def test_lcfs_raw_predicate_boundary():
    # N = beta * n exactly: Case I
    snap = snapshot(3, [E] * 6)
    assert lcfs_case(snap, PolicyParams(0.5, 0.25)) == "I"
    snap = snapshot(3.0001, [E] * 6)
    assert lcfs_case(snap, PolicyParams(0.5, 0.25)) != "I"


def test_lcfs_case_one_selects_latest_arrivals():
    rng = random.Random(2)
    for _ in range(200):
        n = rng.randint(1, 40)
        p = PolicyParams(rng.uniform(0.05, 1.0), 0.01)
        N = p.beta * n * rng.uniform(0.05, 1.0)
        states = [JobState.fresh(job(i, rng.randint(0, 5), (rng.choice([E, I]), 1.0))) for i in range(n)]
        snap = SystemSnapshot.of(0.0, N, states)
        assert lcfs_case(snap, p) == "I"
        alloc = fractional_lcfs(snap, p, F2)
        busy = {j for j in alloc.busy()}
        want = {j.id for j in snap.active[n - math.ceil(p.beta * n - 1e-9):]}
        assert busy == want


# -- PA-EQUI ----------------------------------------------------------------


def test_pa_equi_examples():
    p = PolicyParams(delta=0.25)
    snap = snapshot(16, [E] * 4)
    assert speeds(pa_equi(snap, p, F2), snap) == [2.0] * 4
    snap = snapshot(10, [E] * 20)
    assert speeds(pa_equi(snap, p, F2), snap) == [pytest.approx(math.sqrt(0.5))] * 20
    snap = snapshot(10, [I, I, E, E])
    assert pa_equi_case(snap, p) == "IIa"
    assert speeds(pa_equi(snap, p, F2), snap) == [1.0, 1.0, 2.0, 2.0]


def test_pa_equi_case_one_caps_inelastic():
    snap = snapshot(3, [I, E, E])
    s = speeds(pa_equi(snap, PolicyParams(), F2), snap)
    assert s == [1.0, 1.0, 1.0]
    snap = snapshot(2, [I, E, E, E])
    s = speeds(pa_equi(snap, PolicyParams(), F2), snap)
    assert s == [pytest.approx(math.sqrt(0.5))] * 4


def test_pa_equi_case_two_b_idles_inelastic():
    snap = snapshot(10, [I, E, E, E, E, E])
    p = PolicyParams(delta=0.5)
    assert pa_equi_case(snap, p) == "IIb"
    assert speeds(pa_equi(snap, p, F2), snap) == [0.0] + [pytest.approx(math.sqrt(2))] * 5


def test_pa_equi_only_inelastic():
    snap = snapshot(10, [I, I])
    assert speeds(pa_equi(snap, PolicyParams(), F2), snap) == [1.0, 1.0]


# -- baselines --------------------------------------------------------------


def test_blind_equi_examples():
    snap = snapshot(9, [E, E, E])
    assert speeds(blind_equi(snap, F2), snap) == [pytest.approx(math.sqrt(3))] * 3
    snap = snapshot(9, [I, E, E])
    alloc = blind_equi(snap, F2)
    assert speeds(alloc, snap) == [1.0, pytest.approx(math.sqrt(3)), pytest.approx(math.sqrt(3))]
    assert alloc.capacity_used(F2) == pytest.approx(7.0)
    snap = snapshot(2, [E, I, E, I])
    assert speeds(blind_equi(snap, F2), snap) == [pytest.approx(math.sqrt(0.5))] * 4


def test_inelastic_first_examples():
    snap = snapshot(10, [I, I, I, E, E])
    assert speeds(inelastic_first(snap, F2), snap) == [1.0, 1.0, 1.0] + [pytest.approx(math.sqrt(3.5))] * 2
    snap = snapshot(2, [I, I, I, I, I, E])
    assert speeds(inelastic_first(snap, F2), snap) == [1.0, 1.0, 0.0, 0.0, 0.0, 0.0]
    snap = snapshot(4, [E] * 4)
    assert speeds(inelastic_first(snap, F2), snap) == [1.0] * 4


def test_pa_fcfs_examples():
    snap = snapshot(10, [E, I, E])
    assert speeds(pa_fcfs(snap, F2), snap) == [pytest.approx(math.sqrt(10)), 0.0, 0.0]
    snap = snapshot(10, [I, I, E])
    assert speeds(pa_fcfs(snap, F2), snap) == [1.0, 1.0, pytest.approx(math.sqrt(8))]
    snap = snapshot(1, [I, E])
    assert speeds(pa_fcfs(snap, F2), snap) == [1.0, 0.0]


def test_pa_fcfs_fractional_remainder():
    snap = snapshot(1.5, [I, I, E])
    assert speeds(pa_fcfs(snap, F2), snap) == [1.0, pytest.approx(math.sqrt(0.5)), 0.0]


# -- feasibility ------------------------------------------------------------


def test_check_feasible_examples():
    snap = snapshot(4, [E, E])
    over = Allocation({0: Share(4, 2.0), 1: Share(4, 2.0)})
    assert not check_feasible(over, snap, F2)
    snap = snapshot(4, [I])
    assert not check_feasible(Allocation({0: Share(2.25, 1.5)}), snap, F2)
    with pytest.raises(ValueError):
        check_feasible(Allocation({7: Share(1, 1)}), snap, F2)


@pytest.mark.parametrize("kind", list(PolicyKind))
def test_empty_snapshot_rejected(kind):
    with pytest.raises(EmptySnapshotError):
        allocate(kind, SystemSnapshot(0.0, 4, ()), PolicyParams(), F2)


def test_params_validation():
    PolicyParams(1.0, 0.25)
    for bad in ({"beta": 0}, {"beta": 1.2}, {"beta": 0.5, "theta": 0.5}, {"delta": 1.0}, {"delta": 0}):
        with pytest.raises(ValueError):
            PolicyParams(**bad)


def test_policy_kind_parse_aliases():
    assert PolicyKind.parse("FLCFS") is PolicyKind.FRACTIONAL_LCFS
    assert PolicyKind.parse("pa-equi") is PolicyKind.PA_EQUI
    assert PolicyKind.parse("equi") is PolicyKind.BLIND_EQUI
    with pytest.raises(ValueError):
        PolicyKind.parse("srpt")


def test_random_snapshots_feasible_and_equal_speeds():
    rng = random.Random(7)
    for _ in range(10_000):
        f = SpeedupFunction(rng.choice([1.5, 2.0, 3.0]))
        n = rng.randint(1, 200)
        N = rng.uniform(1, 100)
        snap = SystemSnapshot.of(
            0.0, N, [JobState.fresh(job(i, rng.randint(0, 50), (rng.choice([E, I]), 1.0))) for i in range(n)]
        )
        beta = rng.uniform(0.05, 1.0)
        p = PolicyParams(beta, rng.uniform(0.001, beta * 0.999), rng.uniform(0.01, 0.99))
        for kind in PolicyKind:
            alloc = allocate(kind, snap, p, f)
            assert check_feasible(alloc, snap, f), (kind, N, n)
            if kind in (PolicyKind.FRACTIONAL_LCFS, PolicyKind.PA_EQUI):
                el = {alloc.speed(j.id) for j in snap.active if j.is_elastic and alloc.speed(j.id) > 0}
                il = {alloc.speed(j.id) for j in snap.active if j.is_inelastic and alloc.speed(j.id) > 0}
                assert len(el) <= 1 and len(il) <= 1
            if kind is PolicyKind.PA_FCFS:
                s = speeds(alloc, snap)
                first_zero = next((i for i, x in enumerate(s) if x == 0), len(s))
                assert all(x == 0 for x in s[first_zero:])


def test_case_predicates_match_definition():
    rng = random.Random(8)
    for _ in range(2000):
        n = rng.randint(1, 60)
        kinds = [rng.choice([E, I]) for _ in range(n)]
        snap = snapshot(rng.uniform(0.5, 80), kinds)
        beta = rng.uniform(0.05, 1.0)
        p = PolicyParams(beta, rng.uniform(0.001, beta * 0.999), rng.uniform(0.01, 0.99))
        n_i = kinds.count(I)
        if snap.servers / (beta * n) <= 1:
            want = "I"
        elif n_i >= math.ceil(p.theta * n - 1e-9):
            want = "IIa"
        else:
            want = "IIb"
        assert lcfs_case(snap, p) == want
        if snap.servers / n <= 1:
            want = "I"
        elif n_i >= math.ceil(p.delta * n - 1e-9):
            want = "IIa"
        else:
            want = "IIb"
        assert pa_equi_case(snap, p) == want
