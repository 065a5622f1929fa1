"""Domain types and speedup algebra shared by the simulator and the analysis code."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Optional

WORK_TOL = 1e-9
CAPACITY_RTOL = 1e-9


class DomainError(ValueError):
    """Argument outside the domain of a formula."""


class ContractViolation(RuntimeError):
    """A caller broke an operation's precondition."""


class PhaseKind(str, enum.Enum):
    ELASTIC = "elastic"
    INELASTIC = "inelastic"

    def other(self) -> "PhaseKind":
        return PhaseKind.INELASTIC if self is PhaseKind.ELASTIC else PhaseKind.ELASTIC


@dataclass(frozen=True)
class SpeedupFunction:
    """Speedup ``P(k) = k**(1/alpha)`` for a job holding ``k`` servers.

    ``Q(x) = x / P(x) = x**(1 - 1/alpha)`` is the companion map used by the
    potential-function bounds.
    """

    alpha: float

    def __post_init__(self) -> None:
        if not (self.alpha > 1.0) or math.isinf(self.alpha):
            raise DomainError(f"speedup exponent must satisfy alpha > 1, got {self.alpha}")

    def p(self, x: float) -> float:
        if x < 0:
            raise DomainError(f"P is defined for x >= 0, got {x}")
        return x ** (1.0 / self.alpha)

    def q(self, x: float) -> float:
        if x < 0:
            raise DomainError(f"Q is defined for x >= 0, got {x}")
        return x ** (1.0 - 1.0 / self.alpha)

    def p_inverse(self, s: float) -> float:
        if s < 0:
            raise DomainError(f"P^-1 is defined for s >= 0, got {s}")
        return s**self.alpha


def speedup_p(f: SpeedupFunction, x: float) -> float:
    return f.p(x)


def speedup_q(f: SpeedupFunction, x: float) -> float:
    return f.q(x)


def speedup_p_inverse(f: SpeedupFunction, s: float) -> float:
    return f.p_inverse(s)


@dataclass(frozen=True)
class PhaseSpec:
    kind: PhaseKind
    size: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", PhaseKind(self.kind))
        if not (self.size > 0) or math.isinf(self.size):
            raise ValueError(f"phase size must be finite and > 0, got {self.size}")


@dataclass(frozen=True)
class JobSpec:
    id: int
    arrival: float
    phases: tuple[PhaseSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "phases", tuple(self.phases))
        if not self.phases:
            raise ValueError(f"job {self.id} has no phases")
        if self.id < 0:
            raise ValueError(f"job ids must be non-negative, got {self.id}")
        if not (self.arrival >= 0) or math.isinf(self.arrival):
            raise ValueError(f"job {self.id}: arrival must be finite and >= 0, got {self.arrival}")

    @property
    def total_work(self) -> float:
        return self._tail_total[0]

    @property
    def inelastic_work(self) -> float:
        return self._tail_inelastic[0]

    # Sums over phases strictly after index i; index len(phases) is 0.
    @cached_property
    def _tail_total(self) -> tuple[float, ...]:
        out = [0.0] * (len(self.phases) + 1)
        for i in range(len(self.phases) - 1, -1, -1):
            out[i] = out[i + 1] + self.phases[i].size
        return tuple(out)

    @cached_property
    def _tail_inelastic(self) -> tuple[float, ...]:
        out = [0.0] * (len(self.phases) + 1)
        for i in range(len(self.phases) - 1, -1, -1):
            ph = self.phases[i]
            out[i] = out[i + 1] + (ph.size if ph.kind is PhaseKind.INELASTIC else 0.0)
        return tuple(out)

    def sort_key(self) -> tuple[float, int]:
        return (self.arrival, self.id)


@dataclass(frozen=True)
class JobState:
    """Remaining-work state of one job.

    ``remaining_total`` and ``remaining_inelastic`` are derived from the
    current phase index and the remaining work in that phase, so they never
    drift from the phase list.
    """

    spec: JobSpec
    current_phase: int
    remaining_in_phase: float

    @classmethod
    def fresh(cls, spec: JobSpec) -> "JobState":
        return cls(spec, 0, spec.phases[0].size)

    @property
    def id(self) -> int:
        return self.spec.id

    @property
    def done(self) -> bool:
        return self.current_phase >= len(self.spec.phases)

    @property
    def kind(self) -> Optional[PhaseKind]:
        if self.done:
            return None
        return self.spec.phases[self.current_phase].kind

    @property
    def is_elastic(self) -> bool:
        return self.kind is PhaseKind.ELASTIC

    @property
    def is_inelastic(self) -> bool:
        return self.kind is PhaseKind.INELASTIC

    @property
    def remaining_total(self) -> float:
        if self.done:
            return 0.0
        return self.remaining_in_phase + self.spec._tail_total[self.current_phase + 1]

    @property
    def remaining_inelastic(self) -> float:
        if self.done:
            return 0.0
        tail = self.spec._tail_inelastic[self.current_phase + 1]
        if self.is_inelastic:
            return self.remaining_in_phase + tail
        return tail


def advance(job: JobState, speed: float, duration: float) -> JobState:
    """Run ``job`` at ``speed`` for ``duration`` without crossing a phase boundary.

    Landing within ``WORK_TOL`` of the boundary completes the phase; the job
    then sits at the start of its next phase (or is done).
    """
    if speed < 0 or duration < 0:
        raise ContractViolation(f"speed and duration must be >= 0 (got {speed}, {duration})")
    if job.done:
        if speed * duration > 0:
            raise ContractViolation(f"job {job.id} is complete and cannot be advanced")
        return job
    work = speed * duration
    if work == 0:
        return job
    left = job.remaining_in_phase - work
    if left < -WORK_TOL:
        raise ContractViolation(
            f"job {job.id}: {work} units of work overshoot the phase boundary "
            f"({job.remaining_in_phase} left in phase {job.current_phase})"
        )
    if left <= WORK_TOL:
        nxt = job.current_phase + 1
        if nxt >= len(job.spec.phases):
            return JobState(job.spec, nxt, 0.0)
        return JobState(job.spec, nxt, job.spec.phases[nxt].size)
    return JobState(job.spec, job.current_phase, left)


@dataclass(frozen=True)
class SystemSnapshot:
    time: float
    servers: float
    active: tuple[JobState, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "active", tuple(self.active))
        if not (self.servers > 0):
            raise ValueError(f"server count must be > 0, got {self.servers}")
        keys = [j.spec.sort_key() for j in self.active]
        if keys != sorted(keys):
            raise ValueError("active jobs must be ordered by (arrival, id)")
        if any(j.done for j in self.active):
            raise ValueError("completed jobs cannot be active")

    @classmethod
    def of(cls, time: float, servers: float, jobs: Iterable[JobState]) -> "SystemSnapshot":
        return cls(time, servers, tuple(sorted(jobs, key=lambda j: j.spec.sort_key())))

    @property
    def n(self) -> int:
        return len(self.active)

    @cached_property
    def n_i(self) -> int:
        return sum(1 for j in self.active if j.is_inelastic)

    @property
    def n_e(self) -> int:
        return self.n - self.n_i

    def job(self, job_id: int) -> JobState:
        for j in self.active:
            if j.id == job_id:
                return j
        raise KeyError(job_id)


class Share(NamedTuple):
    servers: float
    speed: float


@dataclass(frozen=True)
class Allocation:
    """Per-job server share and speed; jobs without an entry get nothing."""

    entries: Mapping[int, Share] = field(default_factory=dict)

    def speed(self, job_id: int) -> float:
        e = self.entries.get(job_id)
        return 0.0 if e is None else e.speed

    def servers(self, job_id: int) -> float:
        e = self.entries.get(job_id)
        return 0.0 if e is None else e.servers

    def busy(self) -> dict[int, float]:
        return {j: e.speed for j, e in self.entries.items() if e.speed > 0}

    def capacity_used(self, f: SpeedupFunction) -> float:
        return sum(f.p_inverse(e.speed) for e in self.entries.values())


def ceil_count(x: float) -> int:
    """Ceiling that ignores float noise, so ``ceil(0.1 * 30)`` is 3, not 4."""
    return int(math.ceil(x - 1e-9))


def at_most(a: float, b: float) -> bool:
    """``a <= b`` up to a relative 1e-12 slack (case predicates with raw products)."""
    return a <= b * (1.0 + 1e-12)
