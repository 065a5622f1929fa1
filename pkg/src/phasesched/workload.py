"""Workload generation and workload files.

Random draws come from numpy's Philox counter-based generator. Each
replication owns the 128-bit key ``(seed, replication)`` and every quantity
kind (arrival counts, phase counts, first-phase coins, phase sizes) reads its
own counter range, so the draws for a given job and phase depend only on the
seed, the replication index and the job/phase position, never on which
policies are later run on the workload.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .core import JobSpec, PhaseKind, PhaseSpec

ELASTIC_CODE = 0
INELASTIC_CODE = 1

_STREAM_ARRIVALS = 1
_STREAM_PHASE_COUNTS = 2
_STREAM_FIRST_KIND = 3
_STREAM_SIZES = 4

_U64 = (1 << 64) - 1


class FirstPhase(str, enum.Enum):
    RANDOM_EQUAL = "random"
    ELASTIC = "elastic"
    INELASTIC = "inelastic"


@dataclass(frozen=True)
class StochasticConfig:
    arrival_rate: float
    horizon_slots: int = 1000
    mean_phases: float = 7.0
    mean_phase_size: float = 5.0
    first_phase: FirstPhase = FirstPhase.RANDOM_EQUAL
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "first_phase", FirstPhase(self.first_phase))
        if not (self.arrival_rate >= 0) or math.isinf(self.arrival_rate):
            raise ValueError(f"arrival_rate must be finite and >= 0, got {self.arrival_rate}")
        if int(self.horizon_slots) != self.horizon_slots or self.horizon_slots < 1:
            raise ValueError(f"horizon_slots must be an integer >= 1, got {self.horizon_slots}")
        if not (self.mean_phases > 0):
            raise ValueError(f"mean_phases must be > 0, got {self.mean_phases}")
        if not (self.mean_phase_size > 0):
            raise ValueError(f"mean_phase_size must be > 0, got {self.mean_phase_size}")


@dataclass(frozen=True)
class ProfileConfig:
    sizes: tuple[float, ...]
    arrival_rate: float
    horizon_slots: int = 1000
    first_phase: FirstPhase = FirstPhase.RANDOM_EQUAL
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "sizes", tuple(float(x) for x in self.sizes))
        object.__setattr__(self, "first_phase", FirstPhase(self.first_phase))
        if not self.sizes:
            raise ValueError("profile sizes must be non-empty")
        if any(not (x > 0) or math.isinf(x) for x in self.sizes):
            raise ValueError(f"profile sizes must be finite and > 0, got {self.sizes}")
        if not (self.arrival_rate >= 0) or math.isinf(self.arrival_rate):
            raise ValueError(f"arrival_rate must be finite and >= 0, got {self.arrival_rate}")
        if int(self.horizon_slots) != self.horizon_slots or self.horizon_slots < 1:
            raise ValueError(f"horizon_slots must be an integer >= 1, got {self.horizon_slots}")


@dataclass(frozen=True)
class PackedWorkload:
    """Flat arrays consumed by the compiled kernels.

    Job ``j`` owns phases ``ph_start[j]:ph_start[j+1]``; jobs are sorted by
    ``(arrival, id)``.
    """

    ids: np.ndarray
    arrival: np.ndarray
    ph_start: np.ndarray
    ph_size: np.ndarray
    ph_kind: np.ndarray

    @property
    def n_jobs(self) -> int:
        return len(self.arrival)

    def job_work(self) -> np.ndarray:
        if self.n_jobs == 0:
            return np.zeros(0)
        return np.add.reduceat(self.ph_size, self.ph_start[:-1])

    def to_jobs(self) -> list[JobSpec]:
        jobs = []
        kinds = (PhaseKind.ELASTIC, PhaseKind.INELASTIC)
        for j in range(self.n_jobs):
            lo, hi = int(self.ph_start[j]), int(self.ph_start[j + 1])
            phases = tuple(PhaseSpec(kinds[int(self.ph_kind[p])], float(self.ph_size[p])) for p in range(lo, hi))
            jobs.append(JobSpec(int(self.ids[j]), float(self.arrival[j]), phases))
        return jobs


def pack(jobs: Sequence[JobSpec]) -> PackedWorkload:
    jobs = sorted(jobs, key=lambda j: j.sort_key())
    counts = [len(j.phases) for j in jobs]
    ph_start = np.zeros(len(jobs) + 1, dtype=np.int64)
    ph_start[1:] = np.cumsum(counts, dtype=np.int64)
    sizes = [p.size for j in jobs for p in j.phases]
    kinds = [INELASTIC_CODE if p.kind is PhaseKind.INELASTIC else ELASTIC_CODE for j in jobs for p in j.phases]
    return PackedWorkload(
        ids=np.array([j.id for j in jobs], dtype=np.int64),
        arrival=np.array([j.arrival for j in jobs], dtype=np.float64),
        ph_start=ph_start,
        ph_size=np.array(sizes, dtype=np.float64),
        ph_kind=np.array(kinds, dtype=np.int8),
    )


def stream(seed: int, replication: int, purpose: int) -> np.random.Generator:
    """Generator for one (seed, replication, purpose) substream."""
    key = np.array([seed & _U64, replication & _U64], dtype=np.uint64)
    counter = np.array([0, 0, purpose, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def _arrivals(rate: float, horizon: int, seed: int, replication: int) -> np.ndarray:
    counts = stream(seed, replication, _STREAM_ARRIVALS).poisson(rate, horizon)
    return np.repeat(np.arange(horizon, dtype=np.float64), counts)


def _first_kinds(mode: FirstPhase, n: int, seed: int, replication: int) -> np.ndarray:
    if mode is FirstPhase.ELASTIC:
        return np.full(n, ELASTIC_CODE, dtype=np.int8)
    if mode is FirstPhase.INELASTIC:
        return np.full(n, INELASTIC_CODE, dtype=np.int8)
    return stream(seed, replication, _STREAM_FIRST_KIND).integers(0, 2, n).astype(np.int8)


def _alternating_kinds(first: np.ndarray, ph_start: np.ndarray) -> np.ndarray:
    counts = np.diff(ph_start)
    owner_first = np.repeat(first.astype(np.int64), counts)
    offset = np.arange(ph_start[-1], dtype=np.int64) - np.repeat(ph_start[:-1], counts)
    return ((owner_first + offset) % 2).astype(np.int8)


def generate_stochastic_packed(cfg: StochasticConfig, replication: int = 0) -> PackedWorkload:
    arrival = _arrivals(cfg.arrival_rate, cfg.horizon_slots, cfg.seed, replication)
    n = len(arrival)
    k = np.maximum(stream(cfg.seed, replication, _STREAM_PHASE_COUNTS).poisson(cfg.mean_phases, n), 1)
    ph_start = np.zeros(n + 1, dtype=np.int64)
    ph_start[1:] = np.cumsum(k)
    sizes = stream(cfg.seed, replication, _STREAM_SIZES).exponential(cfg.mean_phase_size, int(ph_start[-1]))
    # exponential draws can be exactly zero in principle; phases must be positive
    sizes = np.maximum(sizes, np.finfo(np.float64).tiny)
    first = _first_kinds(cfg.first_phase, n, cfg.seed, replication)
    return PackedWorkload(np.arange(n, dtype=np.int64), arrival, ph_start, sizes, _alternating_kinds(first, ph_start))


def generate_profile_packed(cfg: ProfileConfig, replication: int = 0) -> PackedWorkload:
    arrival = _arrivals(cfg.arrival_rate, cfg.horizon_slots, cfg.seed, replication)
    n = len(arrival)
    k = len(cfg.sizes)
    ph_start = np.arange(n + 1, dtype=np.int64) * k
    sizes = np.tile(np.array(cfg.sizes, dtype=np.float64), n)
    first = _first_kinds(cfg.first_phase, n, cfg.seed, replication)
    return PackedWorkload(np.arange(n, dtype=np.int64), arrival, ph_start, sizes, _alternating_kinds(first, ph_start))


def generate_stochastic(cfg: StochasticConfig, replication: int = 0) -> list[JobSpec]:
    return generate_stochastic_packed(cfg, replication).to_jobs()


def generate_profile(cfg: ProfileConfig, replication: int = 0) -> list[JobSpec]:
    return generate_profile_packed(cfg, replication).to_jobs()


def small_random_workload(
    seed: int,
    n_jobs: int,
    time_zero: bool = False,
    max_phases: int = 5,
    mean_size: float = 3.0,
    max_arrival: int = 8,
) -> list[JobSpec]:
    """Small irregular workload for verification runs.

    Phase counts are uniform on ``1..max_phases``, sizes are ``0.01`` plus an
    exponential draw, kinds alternate from a fair coin, and arrivals are
    integers in ``0..max_arrival`` (all 0 with ``time_zero``).
    """
    rng = np.random.default_rng(seed)
    jobs = []
    for i in range(n_jobs):
        k = int(rng.integers(1, max_phases + 1))
        kind = PhaseKind.ELASTIC if rng.integers(0, 2) == 0 else PhaseKind.INELASTIC
        phases = []
        for _ in range(k):
            phases.append(PhaseSpec(kind, float(rng.exponential(mean_size)) + 0.01))
            kind = kind.other()
        arrival = 0.0 if time_zero else float(rng.integers(0, max_arrival + 1))
        jobs.append(JobSpec(i, arrival, tuple(phases)))
    return jobs


def truncated_poisson_mean(lam: float) -> float:
    """Mean of ``max(K, 1)`` for ``K ~ Poisson(lam)``."""
    return lam + math.exp(-lam)


class WorkloadParseError(ValueError):
    pass


def save_workload(jobs: Sequence[JobSpec], path: Union[str, Path]) -> None:
    doc = {
        "jobs": [
            {
                "id": j.id,
                "arrival": j.arrival,
                "phases": [{"kind": p.kind.value, "size": p.size} for p in j.phases],
            }
            for j in jobs
        ]
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise WorkloadParseError(f"{where}: expected a number, got {value!r}")
    return float(value)


def parse_workload(text: str, source: str = "<string>") -> list[JobSpec]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise WorkloadParseError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("jobs"), list):
        raise WorkloadParseError(f"{source}: top level must be an object with a 'jobs' array")
    jobs: list[JobSpec] = []
    seen: set[int] = set()
    for i, raw in enumerate(doc["jobs"]):
        where = f"{source}: jobs[{i}]"
        if not isinstance(raw, dict):
            raise WorkloadParseError(f"{where}: expected an object")
        jid = raw.get("id")
        if isinstance(jid, bool) or not isinstance(jid, int) or jid < 0:
            raise WorkloadParseError(f"{where}.id: expected a non-negative integer, got {jid!r}")
        if jid in seen:
            raise WorkloadParseError(f"{where}.id: duplicate id {jid}")
        seen.add(jid)
        arrival = _number(raw.get("arrival"), f"{where}.arrival")
        if not (arrival >= 0) or math.isinf(arrival):
            raise WorkloadParseError(f"{where}.arrival: must be finite and >= 0, got {arrival}")
        phases_raw = raw.get("phases")
        if not isinstance(phases_raw, list) or not phases_raw:
            raise WorkloadParseError(f"{where}.phases: expected a non-empty array")
        phases = []
        for k, ph in enumerate(phases_raw):
            pw = f"{where}.phases[{k}]"
            if not isinstance(ph, dict):
                raise WorkloadParseError(f"{pw}: expected an object")
            kind = ph.get("kind")
            if kind not in ("elastic", "inelastic"):
                raise WorkloadParseError(f"{pw}.kind: expected 'elastic' or 'inelastic', got {kind!r}")
            size = _number(ph.get("size"), f"{pw}.size")
            if not (size > 0) or math.isinf(size):
                raise WorkloadParseError(f"{pw}.size: must be finite and > 0, got {size}")
            phases.append(PhaseSpec(PhaseKind(kind), size))
        jobs.append(JobSpec(jid, arrival, tuple(phases)))
    return jobs


def load_workload(path: Union[str, Path]) -> list[JobSpec]:
    p = Path(path)
    return parse_workload(p.read_text(encoding="utf-8"), str(p))
