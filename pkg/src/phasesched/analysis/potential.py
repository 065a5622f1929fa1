"""Potential functions comparing an algorithm's schedule with another schedule.

Both potentials are sums of ``(x)^+`` terms in per-job remaining-work gaps
plus a linear in-elastic-work term. Between events every gap is linear in
time, so each ``(x)^+`` is convex on the interval: its slope is largest at
the right end. Drift checks therefore evaluate one-sided derivatives at both
ends of each interval, alongside the plain difference quotient.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

from ..core import JobState, SpeedupFunction, SystemSnapshot
from ..engine import EventKind, Trace
from ..schedulers import PolicyParams, check_feasible, lcfs_case, pa_equi_case
from .bounds import lcfs_bound, pa_equi_constants

DRIFT_RTOL = 1e-7
JUMP_RTOL = 1e-9
GAP_ATOL = 1e-12
SLIVER_WIDTH = 1e-9


class WorkloadMismatch(ValueError):
    pass


@dataclass(frozen=True)
class PotentialEval:
    time: float
    phi1: float
    phi2: float
    phi_total: float
    phi_sf1: float
    phi_sf_total: float


def _match(alg: SystemSnapshot, cmp: SystemSnapshot) -> dict[int, JobState]:
    other = {j.id: j for j in cmp.active}
    for j in alg.active:
        o = other.get(j.id)
        if o is not None and o.spec != j.spec:
            raise WorkloadMismatch(f"job {j.id} differs between the two schedules")
    return other


def _ranks(alg: SystemSnapshot, ranking: str) -> list[int]:
    n = alg.n
    if ranking == "arrival":
        return list(range(1, n + 1))
    if ranking == "reversed":
        # deliberately wrong ordering, kept as a negative control for the checks
        return list(range(n, 0, -1))
    raise ValueError(f"unknown ranking {ranking!r}")


def evaluate(
    alg: SystemSnapshot,
    cmp: SystemSnapshot,
    c1: float,
    c2: float,
    f: SpeedupFunction,
    ranking: str = "arrival",
) -> PotentialEval:
    other = _match(alg, cmp)
    pN = f.p(alg.servers)
    phi1 = 0.0
    gap_sum = 0.0
    for r, j in zip(_ranks(alg, ranking), alg.active):
        o = other.get(j.id)
        gap = j.remaining_total - (o.remaining_total if o is not None else 0.0)
        if gap > 0:
            phi1 += f.p(r) / pN * gap
            gap_sum += gap
    phi2 = math.fsum(j.remaining_inelastic for j in alg.active) - math.fsum(j.remaining_inelastic for j in cmp.active)
    sf1 = f.p(alg.n / alg.servers) * gap_sum
    return PotentialEval(alg.time, phi1, phi2, c1 * phi1 + c2 * phi2, sf1, c1 * sf1 + c2 * phi2)


def phi_online(alg, cmp, c1, c2, f, ranking: str = "arrival") -> PotentialEval:
    return evaluate(alg, cmp, c1, c2, f, ranking)


def phi_time_zero(alg, cmp, c1, c2, f) -> PotentialEval:
    for snap in (alg, cmp):
        for j in snap.active:
            if j.spec.arrival != 0:
                raise ValueError(f"job {j.id} arrives at {j.spec.arrival}; this potential needs every arrival at 0")
    return evaluate(alg, cmp, c1, c2, f)


# -- jumps --------------------------------------------------------------------


@dataclass
class JumpReport:
    passed: bool
    max_jump: float
    worst_time: Optional[float]
    checked: int
    rows: list = field(default_factory=list)


def _check_same_workload(a: Trace, b: Trace) -> None:
    if {j.id: j for j in a.jobs} != {j.id: j for j in b.jobs}:
        raise WorkloadMismatch("traces were produced from different workloads")


def _jump_times(*traces: Trace) -> list[float]:
    kinds = (EventKind.ARRIVAL, EventKind.JOB_COMPLETION)
    return sorted({e.time for tr in traces for e in tr.events if e.kind in kinds})


def verify_jumps(
    trace_alg: Trace,
    trace_cmp: Trace,
    c1: float,
    c2: float,
    f: SpeedupFunction,
    time_zero: bool = False,
    ranking: str = "arrival",
) -> JumpReport:
    """Potential just after minus just before every arrival and departure."""
    _check_same_workload(trace_alg, trace_cmp)
    worst = -math.inf
    worst_t = None
    ok = True
    rows = []
    times = _jump_times(trace_alg, trace_cmp)
    for t in times:
        before = evaluate(trace_alg.state_at(t, "before"), trace_cmp.state_at(t, "before"), c1, c2, f, ranking)
        after = evaluate(trace_alg.state_at(t, "after"), trace_cmp.state_at(t, "after"), c1, c2, f, ranking)
        pb = before.phi_sf_total if time_zero else before.phi_total
        pa = after.phi_sf_total if time_zero else after.phi_total
        jump = pa - pb
        rows.append((t, pb, pa, jump))
        if jump > worst:
            worst, worst_t = jump, t
        if jump > JUMP_RTOL * (1.0 + max(abs(pa), abs(pb))):
            ok = False
    return JumpReport(ok, max(worst, 0.0) if times else 0.0, worst_t, len(times), rows)


# -- drifts -------------------------------------------------------------------


def _right_slope(x: float, v: float) -> float:
    if x > GAP_ATOL:
        return v
    if x < -GAP_ATOL:
        return 0.0
    return max(v, 0.0)


def _left_slope(x: float, v: float) -> float:
    if x > GAP_ATOL:
        return v
    if x < -GAP_ATOL:
        return 0.0
    return min(v, 0.0)


def _slopes(alg, alg_alloc, cmp, cmp_alloc, c1, c2, f, time_zero, end: bool):
    """(algorithm-side, comparison-side, joint) derivative of the potential."""
    slope = _left_slope if end else _right_slope
    other = _match(alg, cmp)
    if time_zero:
        weights = [f.p(alg.n / alg.servers)] * alg.n
    else:
        pN = f.p(alg.servers)
        weights = [f.p(r) / pN for r in range(1, alg.n + 1)]
    d_alg = d_cmp = d_joint = 0.0
    for w, j in zip(weights, alg.active):
        o = other.get(j.id)
        x = j.remaining_total - (o.remaining_total if o is not None else 0.0)
        sa = alg_alloc.speed(j.id)
        so = cmp_alloc.speed(j.id) if o is not None else 0.0
        d_alg += c1 * w * slope(x, -sa)
        d_cmp += c1 * w * slope(x, so)
        d_joint += c1 * w * slope(x, so - sa)
    i_alg = sum(alg_alloc.speed(j.id) for j in alg.active if j.is_inelastic)
    i_cmp = sum(cmp_alloc.speed(j.id) for j in cmp.active if j.is_inelastic)
    d_alg -= c2 * i_alg
    d_cmp += c2 * i_cmp
    d_joint += c2 * (i_cmp - i_alg)
    return d_alg, d_cmp, d_joint


def _interval_alloc(trace: Trace, t0: float):
    snap = trace.state_at(t0, "after")
    if snap.n == 0:
        return snap, None
    starts = trace._starts()
    i = bisect.bisect_right(starts, t0) - 1
    return snap, trace.intervals[i].alloc


@dataclass
class DriftRow:
    interval_start: float
    interval_end: float
    side: str
    drift: float
    bound: float
    margin: float
    applicable: bool

    @property
    def ok(self) -> bool:
        return (not self.applicable) or self.drift <= self.bound + DRIFT_RTOL * (1.0 + abs(self.bound))


@dataclass
class DriftReport:
    rows: list[DriftRow]

    @property
    def passed(self) -> bool:
        return all(r.ok for r in self.rows)

    @property
    def applicable_rows(self) -> int:
        return sum(1 for r in self.rows if r.applicable)

    @property
    def worst_margin(self) -> float:
        vals = [r.margin for r in self.rows if r.applicable]
        return min(vals) if vals else math.inf

    def failures(self) -> list[DriftRow]:
        return [r for r in self.rows if not r.ok]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["interval_start", "interval_end", "side", "drift", "bound", "margin", "applicable"])
        for r in self.rows:
            w.writerow([repr(r.interval_start), repr(r.interval_end), r.side, repr(r.drift), repr(r.bound),
                        repr(r.margin), str(r.applicable).lower()])
        return buf.getvalue()


def _row(t0, t1, side, drift, bound, applicable) -> DriftRow:
    return DriftRow(t0, t1, side, drift, bound, bound - drift, applicable)


def _interval_grid(*traces: Trace) -> list[float]:
    times = {e.time for tr in traces for e in tr.events}
    for tr in traces:
        for iv in tr.intervals:
            times.add(iv.start)
            times.add(iv.end)
    return sorted(times)


def _sliver(t0: float, t1: float) -> bool:
    """Interval between near-coincident events of the two traces.

    Work done on it is below float resolution, so a job one schedule has
    just finished can look alive with a gap under ``GAP_ATOL`` in the other.
    Its rows are reported but not applicable: they carry no measure.
    """
    return t1 - t0 <= SLIVER_WIDTH * (1.0 + abs(t1))


def _quotients(trace_alg, trace_cmp, t0, t1, c1, c2, f, time_zero):
    """One-sided difference quotients: advance one schedule, hold the other."""
    if _sliver(t0, t1):
        return -math.inf, -math.inf
    a0 = trace_alg.state_at(t0, "after")
    o0 = trace_cmp.state_at(t0, "after")
    a1 = trace_alg.state_at(t1, "before")
    o1 = trace_cmp.state_at(t1, "before")
    pick = (lambda e: e.phi_sf_total) if time_zero else (lambda e: e.phi_total)
    dt = t1 - t0
    base = pick(evaluate(a0, o0, c1, c2, f))
    alg_only = pick(evaluate(a1, o0, c1, c2, f))
    cmp_only = pick(evaluate(a0, o1, c1, c2, f))
    return (alg_only - base) / dt, (cmp_only - base) / dt


def verify_drifts_lcfs(
    trace_alg: Trace,
    trace_cmp: Trace,
    params: PolicyParams,
    gamma: float,
    f: SpeedupFunction,
) -> DriftReport:
    """Drift checks for Fractional-LCFS against any feasible comparison schedule.

    Rows per interval: ``opt`` (comparison-side drift against its bound),
    ``alg`` (algorithm-side drift, applicable only when ``n_o <= gamma n``)
    and ``running`` (``n + dPhi/dt <= kappa n_o``).
    """
    _check_same_workload(trace_alg, trace_cmp)
    b = lcfs_bound(f.alpha, params.beta, params.theta, gamma)
    if not b.feasible:
        raise ValueError(f"parameters violate {b.violated_conditions}; constants undefined")
    c1, c2, kappa = b.c1, b.c2, b.kappa
    beta, theta = params.beta, params.theta
    rows: list[DriftRow] = []
    grid = _interval_grid(trace_alg, trace_cmp)
    for t0, t1 in zip(grid, grid[1:]):
        if t1 <= t0:
            continue
        alg, alloc_a = _interval_alloc(trace_alg, t0)
        cmp, alloc_o = _interval_alloc(trace_cmp, t0)
        if alg.n == 0 and cmp.n == 0:
            continue
        _require_feasible(cmp, alloc_o, f)
        n, n_o = alg.n, cmp.n
        ends = []
        for end, ta, tc in ((False, alg, cmp), (True, trace_alg.state_at(t1, "before"), trace_cmp.state_at(t1, "before"))):
            ends.append(_slopes(ta, alloc_a or _EMPTY, tc, alloc_o or _EMPTY, c1, c2, f, False, end))
        qa, qo = _quotients(trace_alg, trace_cmp, t0, t1, c1, c2, f, False)
        d_alg = max(ends[0][0], ends[1][0], qa)
        d_opt = max(ends[0][1], ends[1][1], qo)
        d_joint = max(ends[0][2], ends[1][2])

        opt_bound = c2 * n_o + (c1 * n * f.q(n_o) / f.q(n) if n > 0 else 0.0)
        live = not _sliver(t0, t1)
        rows.append(_row(t0, t1, "opt", d_opt, opt_bound, live))

        if n > 0:
            applicable = live and n_o <= gamma * n
            case = lcfs_case(alg, params)
            if case == "I":
                bound = -c1 * (1 - beta) * (beta - gamma) * n / f.p(beta)
            elif case == "IIa":
                bound = -c2 * min(alg.n_i, math.floor(alg.servers))
            else:
                bound = -c1 * (1 - beta) * (beta - theta - gamma) * n / f.p(beta)
            rows.append(_row(t0, t1, f"alg-{case}", d_alg, bound, applicable))
        rows.append(_row(t0, t1, "running", n + d_joint, kappa * n_o, live))
    return DriftReport(rows)


def verify_drifts_pa_equi(
    trace_alg: Trace,
    trace_cmp: Trace,
    params: PolicyParams,
    f: SpeedupFunction,
) -> DriftReport:
    """Drift checks for PA-EQUI with every job present at time 0."""
    _check_same_workload(trace_alg, trace_cmp)
    if any(j.arrival != 0 for j in trace_alg.jobs):
        raise ValueError("PA-EQUI drift checks need every arrival at time 0")
    c1, c2 = pa_equi_constants(f.alpha, params.delta)
    a = f.alpha
    rows: list[DriftRow] = []
    grid = _interval_grid(trace_alg, trace_cmp)
    for t0, t1 in zip(grid, grid[1:]):
        if t1 <= t0:
            continue
        alg, alloc_a = _interval_alloc(trace_alg, t0)
        cmp, alloc_o = _interval_alloc(trace_cmp, t0)
        if alg.n == 0 and cmp.n == 0:
            continue
        _require_feasible(cmp, alloc_o, f)
        n, n_o = alg.n, cmp.n
        ends = []
        for end, ta, tc in ((False, alg, cmp), (True, trace_alg.state_at(t1, "before"), trace_cmp.state_at(t1, "before"))):
            ends.append(_slopes(ta, alloc_a or _EMPTY, tc, alloc_o or _EMPTY, c1, c2, f, True, end))
        qa, qo = _quotients(trace_alg, trace_cmp, t0, t1, c1, c2, f, True)
        d_alg = max(ends[0][0], ends[1][0], qa)
        d_opt = max(ends[0][1], ends[1][1], qo)
        opt_bound = c1 * n / a + c1 * (1 - 1 / a) * n_o + c2 * n_o
        live = not _sliver(t0, t1)
        rows.append(_row(t0, t1, "opt", d_opt, opt_bound, live))
        if n > 0:
            case = pa_equi_case(alg, params)
            if case == "I":
                bound = -c1 * max(n - n_o, 0)
            elif case == "IIa":
                bound = -c2 * alg.n_i
            else:
                bound = -c1 * max(alg.n_e - n_o, 0)
            rows.append(_row(t0, t1, f"alg-{case}", d_alg, bound, live))
    return DriftReport(rows)


def _require_feasible(snap, alloc, f) -> None:
    if alloc is None:
        return
    if not check_feasible(alloc, snap, f):
        raise ValueError(f"comparison schedule is infeasible at t={snap.time}")


class _Empty:
    def speed(self, job_id: int) -> float:
        return 0.0


_EMPTY = _Empty()


def boundary_values(trace_alg: Trace, trace_cmp: Trace, c1: float, c2: float, f: SpeedupFunction) -> tuple[float, float]:
    """Potential before the first arrival and after the last completion."""
    first = min(j.arrival for j in trace_alg.jobs)
    last = max(max(trace_alg.completions.values()), max(trace_cmp.completions.values()))
    start = evaluate(trace_alg.state_at(first, "before"), trace_cmp.state_at(first, "before"), c1, c2, f)
    end = evaluate(trace_alg.state_at(last, "after"), trace_cmp.state_at(last, "after"), c1, c2, f)
    return start.phi_total, end.phi_total
