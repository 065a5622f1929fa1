"""Bounds on the clairvoyant optimum.

``opt_lower_bound`` is rigorous: no schedule beats running each job alone.
``brute_force_opt`` searches time-stepped schedules on tiny instances. Every
schedule it considers is feasible in continuous time (work per step is rounded
down, arrivals are rounded up to the step grid, servers freed inside a step
stay idle until the step ends), so each discretised value is an upper
bound on the optimum. The lower end of the reported bracket comes from the
change under grid refinement and is an empirical estimate, not a proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numba import njit

from ..core import JobSpec, PhaseKind, SpeedupFunction

MAX_JOBS = 3
MAX_STATES = 60_000_000
MAX_WORK = 1_500_000_000


class InstanceTooLarge(ValueError):
    pass


def opt_lower_bound(workload: Sequence[JobSpec], servers: float, f: SpeedupFunction) -> float:
    """Sum over jobs of the contention-free span: elastic work at P(N), in-elastic at 1."""
    pN = f.p(servers)
    total = 0.0
    for j in workload:
        for ph in j.phases:
            total += ph.size / pN if ph.kind is PhaseKind.ELASTIC else ph.size
    return total


@dataclass(frozen=True)
class OracleResult:
    coarse: float
    refined: float
    slack: float
    lower: float
    grid: float
    dt: float

    @property
    def value(self) -> float:
        return self.refined

    @property
    def upper(self) -> float:
        return self.refined

    @property
    def relative_change(self) -> float:
        return abs(self.coarse - self.refined) / self.refined


@njit(cache=True)
def _dp(n_jobs, totals, bounds, kinds, arrive_step, n_layers, units_e, units_i, cap_i, n_grid, dt, strides, n_states):
    # share vectors in grid units; a vector leaving servers idle is kept only
    # when every alive job is saturated, which is checked per state below
    maxc = (n_grid + 1) ** n_jobs
    combos = np.zeros((maxc, 4), np.int64)
    nc = 0
    for a in range(n_grid + 1):
        for b in range(n_grid + 1 if n_jobs > 1 else 1):
            for c in range(n_grid + 1 if n_jobs > 2 else 1):
                tot = a + b + c
                if 0 < tot <= n_grid:
                    combos[nc, 0] = a
                    combos[nc, 1] = b
                    combos[nc, 2] = c
                    combos[nc, 3] = tot
                    nc += 1

    nxt_val = np.full(n_states, np.inf)
    cur_val = np.full(n_states, np.inf)
    u = np.zeros(3, np.int64)
    rem_ph = np.zeros(3, np.int64)
    last = np.zeros(3, np.bool_)
    kind = np.zeros(3, np.int64)
    for layer in range(n_layers - 1, -1, -1):
        stationary = layer == n_layers - 1
        for idx in range(n_states):
            rest = idx
            for q in range(n_jobs):
                u[q] = rest // strides[q]
                rest -= u[q] * strides[q]
            valid = True
            pending = False
            for q in range(n_jobs):
                if arrive_step[q] > layer:
                    pending = True
                    if u[q] != totals[q]:
                        valid = False
            if not valid:
                continue
            alive = 0
            for q in range(n_jobs):
                if u[q] > 0 and arrive_step[q] <= layer:
                    alive += 1
                    done = totals[q] - u[q]
                    p = 0
                    while bounds[q, p + 1] <= done:
                        p += 1
                    rem_ph[q] = bounds[q, p + 1] - done
                    last[q] = bounds[q, p + 1] == totals[q]
                    kind[q] = kinds[q, p]
                else:
                    rem_ph[q] = 0
            if alive == 0:
                cur_val[idx] = nxt_val[idx] if pending else 0.0
                continue
            best = np.inf
            for ci in range(nc):
                nidx = idx
                ok = True
                saturated = True
                cost = 0.0
                for q in range(n_jobs):
                    g = combos[ci, q]
                    if rem_ph[q] == 0:
                        if g > 0:
                            ok = False
                            break
                        continue
                    if kind[q] == 1:
                        if g > cap_i:
                            ok = False
                            break
                        if g < cap_i:
                            saturated = False
                        w = units_i[g]
                    else:
                        saturated = False
                        w = units_e[g]
                    if w >= rem_ph[q] and last[q]:
                        # finishes inside the step; charge only the time it is present
                        cost += dt * rem_ph[q] / w
                    else:
                        cost += dt
                    if w > rem_ph[q]:
                        w = rem_ph[q]
                    nidx -= w * strides[q]
                if not ok or nidx == idx:
                    continue
                if combos[ci, 3] < n_grid and not saturated:
                    continue
                if stationary:
                    v = cost + cur_val[nidx]
                else:
                    v = cost + nxt_val[nidx]
                if v < best:
                    best = v
            cur_val[idx] = best
        for idx in range(n_states):
            nxt_val[idx] = cur_val[idx]
    start = 0
    for q in range(n_jobs):
        start += totals[q] * strides[q]
    return nxt_val[start]


@dataclass
class _Lattice:
    n: int
    n_grid: int
    totals: np.ndarray
    bounds: np.ndarray
    kinds: np.ndarray
    arrive: np.ndarray
    n_layers: int
    strides: np.ndarray
    n_states: int
    delay: float

    @property
    def work(self) -> int:
        return self.n_states * self.n_layers * math.comb(self.n_grid + self.n, self.n)

    def fits(self) -> bool:
        return self.n_states * self.n_layers <= MAX_STATES and self.work <= MAX_WORK


def _lattice(jobs: Sequence[JobSpec], servers: float, grid: float, dt: float, unit: float) -> _Lattice:
    n_grid = int(math.floor(servers / grid + 1e-9))
    if n_grid < 1:
        raise ValueError(f"grid {grid} exceeds the server count {servers}")
    n = len(jobs)
    max_ph = max(len(j.phases) for j in jobs)
    bounds = np.zeros((3, max_ph + 2), dtype=np.int64)
    kinds = np.zeros((3, max_ph + 1), dtype=np.int64)
    totals = np.zeros(3, dtype=np.int64)
    arrive = np.zeros(3, dtype=np.int64)
    delay = 0.0
    for q, j in enumerate(jobs):
        acc = 0
        for p, ph in enumerate(j.phases):
            acc += int(math.ceil(ph.size / unit - 1e-9))
            bounds[q, p + 1] = acc
            kinds[q, p] = 1 if ph.kind is PhaseKind.INELASTIC else 0
        bounds[q, len(j.phases) + 1 :] = acc + 1
        totals[q] = acc
        arrive[q] = int(math.ceil(j.arrival / dt - 1e-9))
        delay += int(arrive[q]) * dt - j.arrival
    strides = np.zeros(3, dtype=np.int64)
    size = 1
    for q in range(n - 1, -1, -1):
        strides[q] = size
        size *= int(totals[q]) + 1
    return _Lattice(n, n_grid, totals, bounds, kinds, arrive, int(arrive[:n].max()) + 1, strides, size, delay)


def _prepare(workload: Sequence[JobSpec], grid: float, dt: float) -> list[JobSpec]:
    jobs = sorted(workload, key=lambda j: j.sort_key())
    if len(jobs) > MAX_JOBS:
        raise InstanceTooLarge(f"brute force handles at most {MAX_JOBS} jobs, got {len(jobs)}")
    if not (grid > 0 and dt > 0):
        raise ValueError("grid and dt must be > 0")
    return jobs


def discretized_opt(
    workload: Sequence[JobSpec],
    servers: float,
    f: SpeedupFunction,
    grid: float,
    dt: float,
    unit: Optional[float] = None,
) -> float:
    """Best time-stepped schedule with server shares on multiples of ``grid``.

    Remaining work is tracked in multiples of ``unit`` (default ``dt / 8``);
    per step a share completes its speed times ``dt`` rounded down to whole
    units.
    """
    jobs = _prepare(workload, grid, dt)
    if not jobs:
        return 0.0
    h = dt / 8 if unit is None else unit
    lat = _lattice(jobs, servers, grid, dt, h)
    if not lat.fits():
        raise InstanceTooLarge(
            f"{lat.n_states} states x {lat.n_layers} layers x {lat.n_grid} grid steps exceeds the search budget"
        )
    shares = [k * grid for k in range(lat.n_grid + 1)]
    units_e = np.array([math.floor(f.p(x) * dt / h + 1e-9) for x in shares], dtype=np.int64)
    units_i = np.array([math.floor(min(1.0, f.p(x)) * dt / h + 1e-9) for x in shares], dtype=np.int64)
    cap_i = int(np.argmax(units_i == units_i[-1]))
    val = _dp(
        lat.n, lat.totals, lat.bounds, lat.kinds, lat.arrive, lat.n_layers,
        units_e, units_i, cap_i, lat.n_grid, dt, lat.strides, lat.n_states,
    )
    return float(val) + lat.delay


def finest_unit(workload: Sequence[JobSpec], servers: float, grid: float, dt: float, max_resolution: int = 256) -> float:
    """Smallest ``dt / r`` (``r <= max_resolution``) whose search fits the budget."""
    jobs = _prepare(workload, grid, dt)
    if not jobs:
        return dt
    lo, hi = 1, max_resolution
    if not _lattice(jobs, servers, grid, dt, dt).fits():
        raise InstanceTooLarge("instance exceeds the search budget even at the coarsest work lattice")
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if _lattice(jobs, servers, grid, dt, dt / mid).fits():
            lo = mid
        else:
            hi = mid - 1
    return dt / lo


def brute_force_opt(
    workload: Sequence[JobSpec],
    servers: float,
    f: SpeedupFunction,
    grid: float,
    dt: float,
    unit: Optional[float] = None,
) -> OracleResult:
    """Discretised optimum at ``(grid, dt)`` and at half of both, with the change as slack.

    Both runs share one work lattice, by default the finest the search budget
    allows at the refined step.
    """
    if unit is None:
        unit = finest_unit(workload, servers, grid / 2, dt / 2)
    coarse = discretized_opt(workload, servers, f, grid, dt, unit)
    refined = discretized_opt(workload, servers, f, grid / 2, dt / 2, unit)
    slack = abs(coarse - refined)
    lower = max(opt_lower_bound(workload, servers, f), refined - slack)
    return OracleResult(coarse, refined, slack, lower, grid, dt)


def empirical_ratio(
    flow_time: float,
    workload: Sequence[JobSpec],
    servers: float,
    f: SpeedupFunction,
    oracle: Optional[OracleResult] = None,
) -> float:
    """Flow time over a lower estimate of the optimum.

    Without ``oracle`` the denominator is the rigorous lower bound, so the
    result can only overstate the true ratio. With ``oracle`` the bracket's
    lower end is also used; that end is empirical.
    """
    lb = opt_lower_bound(workload, servers, f)
    if oracle is not None:
        lb = max(lb, oracle.lower)
    if lb <= 0:
        raise ValueError("ratio undefined: the optimum's lower bound is 0 (empty workload)")
    return flow_time / lb
