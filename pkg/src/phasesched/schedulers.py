"""Scheduling policies: each maps a system snapshot to a feasible allocation."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .core import (
    CAPACITY_RTOL,
    Allocation,
    JobState,
    Share,
    SpeedupFunction,
    SystemSnapshot,
    at_most,
    ceil_count,
)


class PolicyKind(str, enum.Enum):
    FRACTIONAL_LCFS = "flcfs"
    PA_EQUI = "pa-equi"
    BLIND_EQUI = "equi"
    INELASTIC_FIRST = "if"
    PA_FCFS = "pa-fcfs"

    @classmethod
    def parse(cls, text: str) -> "PolicyKind":
        key = text.strip().lower().replace("_", "-")
        aliases = {
            "fractional-lcfs": cls.FRACTIONAL_LCFS,
            "fractionallcfs": cls.FRACTIONAL_LCFS,
            "paequi": cls.PA_EQUI,
            "blind-equi": cls.BLIND_EQUI,
            "blindequi": cls.BLIND_EQUI,
            "inelastic-first": cls.INELASTIC_FIRST,
            "inelasticfirst": cls.INELASTIC_FIRST,
            "pafcfs": cls.PA_FCFS,
        }
        if key in aliases:
            return aliases[key]
        return cls(key)


@dataclass(frozen=True)
class PolicyParams:
    """Tuning constants: ``beta``/``theta`` for Fractional-LCFS, ``delta`` for PA-EQUI.

    ``beta = 1`` is accepted because the simulation study runs it; the
    analysis needs ``beta < 1``.
    """

    beta: float = 1.0
    theta: float = 0.25
    delta: float = 0.25

    def __post_init__(self) -> None:
        if not (0.0 < self.beta <= 1.0):
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if not (0.0 < self.theta < self.beta):
            raise ValueError(f"theta must lie in (0, beta), got theta={self.theta}, beta={self.beta}")
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")


class EmptySnapshotError(ValueError):
    pass


def _require_jobs(snapshot: SystemSnapshot) -> None:
    if snapshot.n == 0:
        raise EmptySnapshotError("policy invoked with no active jobs")


def _elastic_share(f: SpeedupFunction, servers: float) -> Share:
    return Share(servers, f.p(servers))


def _unit_inelastic() -> Share:
    return Share(1.0, 1.0)


def _capped_share(f: SpeedupFunction, job: JobState, servers: float) -> Share:
    # In-elastic work never runs faster than one server; any surplus share is idle.
    s = f.p(servers)
    if job.is_inelastic and s > 1.0:
        return Share(servers, 1.0)
    return Share(servers, s)


def lcfs_case(snapshot: SystemSnapshot, params: PolicyParams) -> str:
    """Which Fractional-LCFS branch applies: ``"I"``, ``"IIa"`` or ``"IIb"``."""
    _require_jobs(snapshot)
    n = snapshot.n
    if at_most(snapshot.servers, params.beta * n):
        return "I"
    if snapshot.n_i >= ceil_count(params.theta * n):
        return "IIa"
    return "IIb"


def fractional_lcfs(snapshot: SystemSnapshot, params: PolicyParams, f: SpeedupFunction) -> Allocation:
    N = snapshot.servers
    n = snapshot.n
    case = lcfs_case(snapshot, params)
    entries: dict[int, Share] = {}
    if case == "I":
        m = ceil_count(params.beta * n)
        share = N / m
        for job in snapshot.active[-m:]:
            entries[job.id] = _capped_share(f, job, share)
    elif case == "IIa":
        inelastic = [j for j in snapshot.active if j.is_inelastic]
        elastic = [j for j in snapshot.active if j.is_elastic]
        c = min(len(inelastic), int(math.floor(N)))
        if c:
            for job in inelastic[-c:]:
                entries[job.id] = _unit_inelastic()
        if elastic and N - c > 0:
            m_e = ceil_count(params.beta * len(elastic))
            share = (N - c) / m_e
            for job in elastic[-m_e:]:
                entries[job.id] = _elastic_share(f, share)
    else:
        m = ceil_count(params.beta * n)
        share = N / m
        for job in snapshot.active[-m:]:
            if job.is_elastic:
                entries[job.id] = _elastic_share(f, share)
    return Allocation(entries)


def pa_equi_case(snapshot: SystemSnapshot, params: PolicyParams) -> str:
    _require_jobs(snapshot)
    n = snapshot.n
    if at_most(snapshot.servers, float(n)):
        return "I"
    if snapshot.n_i >= ceil_count(params.delta * n):
        return "IIa"
    return "IIb"


def pa_equi(snapshot: SystemSnapshot, params: PolicyParams, f: SpeedupFunction) -> Allocation:
    N = snapshot.servers
    n = snapshot.n
    case = pa_equi_case(snapshot, params)
    entries: dict[int, Share] = {}
    if case == "I":
        for job in snapshot.active:
            entries[job.id] = _capped_share(f, job, N / n)
    elif case == "IIa":
        n_i = snapshot.n_i
        n_e = n - n_i
        for job in snapshot.active:
            if job.is_inelastic:
                entries[job.id] = _unit_inelastic()
            elif N - n_i > 0:
                entries[job.id] = _elastic_share(f, (N - n_i) / n_e)
    else:
        n_e = snapshot.n_e
        for job in snapshot.active:
            if job.is_elastic:
                entries[job.id] = _elastic_share(f, N / n_e)
    return Allocation(entries)


def blind_equi(snapshot: SystemSnapshot, f: SpeedupFunction) -> Allocation:
    _require_jobs(snapshot)
    share = snapshot.servers / snapshot.n
    return Allocation({job.id: _capped_share(f, job, share) for job in snapshot.active})


def inelastic_first(snapshot: SystemSnapshot, f: SpeedupFunction) -> Allocation:
    _require_jobs(snapshot)
    N = snapshot.servers
    inelastic = [j for j in snapshot.active if j.is_inelastic]
    elastic = [j for j in snapshot.active if j.is_elastic]
    c = min(len(inelastic), int(math.floor(N)))
    entries: dict[int, Share] = {job.id: _unit_inelastic() for job in inelastic[:c]}
    if elastic and N - c > 0:
        share = (N - c) / len(elastic)
        for job in elastic:
            entries[job.id] = _elastic_share(f, share)
    return Allocation(entries)


def pa_fcfs(snapshot: SystemSnapshot, f: SpeedupFunction) -> Allocation:
    _require_jobs(snapshot)
    left = snapshot.servers
    entries: dict[int, Share] = {}
    for job in snapshot.active:
        if left <= 0:
            break
        if job.is_inelastic:
            if left >= 1.0:
                entries[job.id] = _unit_inelastic()
                left -= 1.0
            else:
                entries[job.id] = _capped_share(f, job, left)
                left = 0.0
        else:
            entries[job.id] = _elastic_share(f, left)
            left = 0.0
    return Allocation(entries)


def allocate(
    kind: PolicyKind, snapshot: SystemSnapshot, params: PolicyParams, f: SpeedupFunction
) -> Allocation:
    kind = PolicyKind(kind)
    if kind is PolicyKind.FRACTIONAL_LCFS:
        return fractional_lcfs(snapshot, params, f)
    if kind is PolicyKind.PA_EQUI:
        return pa_equi(snapshot, params, f)
    if kind is PolicyKind.BLIND_EQUI:
        return blind_equi(snapshot, f)
    if kind is PolicyKind.INELASTIC_FIRST:
        return inelastic_first(snapshot, f)
    return pa_fcfs(snapshot, f)


def check_feasible(alloc: Allocation, snapshot: SystemSnapshot, f: SpeedupFunction) -> bool:
    """Capacity and unit-speed check; raises if ``alloc`` names an inactive job."""
    active = {j.id: j for j in snapshot.active}
    used = 0.0
    for job_id, share in alloc.entries.items():
        job = active.get(job_id)
        if job is None:
            raise ValueError(f"allocation references job {job_id}, which is not active")
        if share.speed < 0 or share.servers < 0:
            return False
        if job.is_inelastic and share.speed > 1.0 + 1e-12:
            return False
        used += f.p_inverse(share.speed)
    return used <= snapshot.servers * (1.0 + CAPACITY_RTOL)
