"""Reference event-driven simulator.

Allocations are recomputed at every event and held fixed in between, so the
state is piecewise linear in time and every interval is recorded exactly.
This engine favours clarity over speed; ``phasesched.fast`` runs the same
dynamics on large workloads.
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

from .core import (
    WORK_TOL,
    Allocation,
    JobSpec,
    JobState,
    SpeedupFunction,
    SystemSnapshot,
    advance,
)
from .schedulers import PolicyKind, PolicyParams, allocate, check_feasible

MIN_STEP = 1e-12


class EventKind(enum.IntEnum):
    ARRIVAL = 0
    PHASE_COMPLETION = 1
    JOB_COMPLETION = 2


class Event(NamedTuple):
    time: float
    kind: EventKind
    job_id: int


class Interval(NamedTuple):
    start: float
    end: float
    snapshot: SystemSnapshot
    alloc: Allocation


class EndOfTrace(Exception):
    """No active jobs and no further arrivals."""


class LivelockError(RuntimeError):
    pass


def next_event(snapshot: SystemSnapshot, alloc: Allocation, next_arrival: Optional[float]) -> Event:
    """Earliest upcoming event; arrivals win ties, then smaller job ids."""
    if snapshot.n == 0 and next_arrival is None:
        raise EndOfTrace()
    best: Optional[Event] = None
    if next_arrival is not None:
        best = Event(next_arrival, EventKind.ARRIVAL, -1)
    for job in snapshot.active:
        s = alloc.speed(job.id)
        if s <= 0:
            continue
        t = snapshot.time + job.remaining_in_phase / s
        last = job.current_phase == len(job.spec.phases) - 1
        kind = EventKind.JOB_COMPLETION if last else EventKind.PHASE_COMPLETION
        cand = Event(t, kind, job.id)
        if best is None or (cand.time, min(cand.kind, 1), cand.job_id) < (best.time, min(best.kind, 1), best.job_id):
            best = cand
    if best is None:
        raise LivelockError(f"t={snapshot.time}: {snapshot.n} active jobs, all at speed 0, no arrivals pending")
    return best


@dataclass
class Trace:
    jobs: tuple[JobSpec, ...]
    servers: float
    events: list[Event] = field(default_factory=list)
    intervals: list[Interval] = field(default_factory=list)
    completions: dict[int, float] = field(default_factory=dict)
    clamped_steps: int = 0
    _start_cache: list[float] = field(default_factory=list, repr=False, compare=False)

    @property
    def flow_time(self) -> float:
        return math.fsum(self.completions[j.id] - j.arrival for j in self.jobs)

    def integral_n(self) -> float:
        return math.fsum((iv.end - iv.start) * iv.snapshot.n for iv in self.intervals)

    def event_times(self) -> list[float]:
        return sorted({e.time for e in self.events})

    def state_at(self, t: float, side: str = "after") -> SystemSnapshot:
        """Snapshot at ``t``; at an event time ``side`` picks the pre- or post-event state."""
        if side not in ("before", "after"):
            raise ValueError("side must be 'before' or 'after'")
        starts = self._starts()
        if side == "after":
            i = bisect.bisect_right(starts, t) - 1
            hit = i >= 0 and t < self.intervals[i].end
        else:
            i = bisect.bisect_left(starts, t) - 1
            hit = i >= 0 and t <= self.intervals[i].end
        if not hit:
            return SystemSnapshot(t, self.servers, ())
        iv = self.intervals[i]
        dt = t - iv.start
        # at an interval end, leftovers the engine treats as complete are exactly zero
        floor = WORK_TOL if t == iv.end else 0.0
        active = []
        for j in iv.snapshot.active:
            rem = j.remaining_in_phase - iv.alloc.speed(j.id) * dt
            active.append(JobState(j.spec, j.current_phase, rem if rem > floor else 0.0))
        return SystemSnapshot(t, self.servers, tuple(active))

    def _starts(self) -> list[float]:
        if len(self._start_cache) != len(self.intervals):
            self._start_cache = [iv.start for iv in self.intervals]
        return self._start_cache


def _validate_workload(workload: Sequence[JobSpec]) -> tuple[JobSpec, ...]:
    jobs = tuple(sorted(workload, key=lambda j: j.sort_key()))
    ids = [j.id for j in jobs]
    if len(set(ids)) != len(ids):
        raise ValueError("job ids must be unique")
    for j in jobs:
        if not math.isfinite(j.arrival):
            raise ValueError(f"job {j.id} has a non-finite arrival time")
    return jobs


def run(
    workload: Sequence[JobSpec],
    policy: PolicyKind,
    params: PolicyParams,
    f: SpeedupFunction,
    servers: float,
) -> Trace:
    policy = PolicyKind(policy)
    if not (servers > 0):
        raise ValueError(f"server count must be > 0, got {servers}")
    if servers < 1 and policy in (PolicyKind.FRACTIONAL_LCFS, PolicyKind.INELASTIC_FIRST):
        # fewer than one server lets these policies idle every job
        raise ValueError(f"{policy.value} needs at least one server, got {servers}")
    jobs = _validate_workload(workload)
    trace = Trace(jobs, servers)
    pending = list(jobs)
    nxt = 0
    active: dict[int, JobState] = {}
    t = 0.0

    while True:
        while nxt < len(pending) and pending[nxt].arrival <= t:
            spec = pending[nxt]
            active[spec.id] = JobState.fresh(spec)
            trace.events.append(Event(t, EventKind.ARRIVAL, spec.id))
            nxt += 1
        next_arrival = pending[nxt].arrival if nxt < len(pending) else None
        if not active:
            if next_arrival is None:
                break
            t = next_arrival
            continue

        snap = SystemSnapshot.of(t, servers, active.values())
        alloc = allocate(policy, snap, params, f)
        if not check_feasible(alloc, snap, f):
            raise RuntimeError(f"t={t}: policy {policy.value} produced an infeasible allocation")
        ev = next_event(snap, alloc, next_arrival)
        if ev.kind is EventKind.ARRIVAL:
            end = ev.time
        else:
            end = ev.time
            if end - t < MIN_STEP:
                end = t + MIN_STEP
                trace.clamped_steps += 1
        dt = end - t
        trace.intervals.append(Interval(t, end, snap, alloc))

        finished = []
        for job in snap.active:
            s = alloc.speed(job.id)
            if s <= 0:
                continue
            # a step may land a hair past the boundary; finish the phase exactly
            speed = min(s, job.remaining_in_phase / dt)
            moved = advance(job, speed, dt)
            if moved.current_phase != job.current_phase:
                kind = EventKind.JOB_COMPLETION if moved.done else EventKind.PHASE_COMPLETION
                trace.events.append(Event(end, kind, job.id))
                if moved.done:
                    finished.append(job.id)
            active[job.id] = moved
        for jid in finished:
            del active[jid]
            trace.completions[jid] = end
        t = end
    trace.events.sort(key=lambda e: (e.time, e.kind is not EventKind.ARRIVAL, e.job_id))
    return trace
