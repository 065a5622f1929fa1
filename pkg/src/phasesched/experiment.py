"""Replicated experiments, parameter sweeps and CSV/JSON output."""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import stats

from .core import SpeedupFunction
from .engine import LivelockError
from .fast import simulate
from .schedulers import PolicyKind, PolicyParams
from .workload import (
    FirstPhase,
    PackedWorkload,
    ProfileConfig,
    StochasticConfig,
    generate_profile_packed,
    generate_stochastic_packed,
    load_workload,
    pack,
)

COLUMNS = (
    "policy", "beta", "theta", "delta", "alpha", "servers", "arrival_rate",
    "replications", "jobs_total", "mean_flow_time", "stddev", "ci95", "pooled_mean",
)
SWEEP_DIMENSIONS = ("arrival_rate", "beta", "servers")

WorkloadSource = Union[StochasticConfig, ProfileConfig, str]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PolicySpec:
    kind: PolicyKind
    params: PolicyParams = field(default_factory=PolicyParams)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", PolicyKind(self.kind))

    @property
    def label(self) -> str:
        return self.kind.value


@dataclass(frozen=True)
class ExperimentConfig:
    policies: tuple[PolicySpec, ...]
    workload: WorkloadSource
    servers: float = 10.0
    alpha: float = 2.0
    replications: int = 200
    base_seed: int = 0
    output: Optional[str] = None
    workers: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "policies", tuple(self.policies))
        try:
            object.__setattr__(self, "servers", float(self.servers))
            object.__setattr__(self, "alpha", float(self.alpha))
        except (TypeError, ValueError):
            raise ConfigError(f"servers and alpha must be numbers, got {self.servers!r}, {self.alpha!r}") from None
        if not self.policies:
            raise ConfigError("at least one policy is required")
        if int(self.replications) != self.replications or self.replications < 1:
            raise ConfigError(f"replications must be an integer >= 1, got {self.replications}")
        if not (self.servers > 0) or math.isinf(self.servers):
            raise ConfigError(f"servers must be finite and > 0, got {self.servers}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        SpeedupFunction(self.alpha)
        for p in self.policies:
            if self.servers < 1 and p.kind in (PolicyKind.FRACTIONAL_LCFS, PolicyKind.INELASTIC_FIRST):
                raise ConfigError(f"{p.label} needs at least one server, got {self.servers}")

    @property
    def arrival_rate(self) -> float:
        if isinstance(self.workload, str):
            return math.nan
        return float(self.workload.arrival_rate)


@dataclass(frozen=True)
class ResultRow:
    policy: str
    beta: float
    theta: float
    delta: float
    alpha: float
    servers: float
    arrival_rate: float
    replications: int
    jobs_total: int
    mean_flow_time: float
    stddev: float
    ci95: float
    pooled_mean: float


@dataclass(frozen=True)
class AggregateResult:
    rows: tuple[ResultRow, ...] = ()
    # per policy row, per replication: (jobs, total flow time)
    samples: tuple[tuple[tuple[int, float], ...], ...] = ()

    def row(self, policy: Union[str, PolicyKind], beta: Optional[float] = None) -> ResultRow:
        label = PolicyKind(policy).value
        for r in self.rows:
            if r.policy == label and (beta is None or r.beta == beta):
                return r
        raise KeyError(f"no row for policy {label}" + ("" if beta is None else f", beta={beta}"))

    def per_replication_means(self, index: int) -> np.ndarray:
        """Per-job mean of each non-empty replication for row ``index``."""
        return np.array([fl / n for n, fl in self.samples[index] if n > 0])

    def __add__(self, other: "AggregateResult") -> "AggregateResult":
        return AggregateResult(self.rows + other.rows, self.samples + other.samples)


def _build_workload(source: WorkloadSource, base_seed: int, replication: int) -> PackedWorkload:
    if isinstance(source, StochasticConfig):
        return generate_stochastic_packed(replace(source, seed=base_seed), replication)
    if isinstance(source, ProfileConfig):
        return generate_profile_packed(replace(source, seed=base_seed), replication)
    # a fixed file is the same workload in every replication
    return pack(load_workload(source))


def _replicate(cfg: ExperimentConfig, replication: int) -> list[tuple[int, float]]:
    w = _build_workload(cfg.workload, cfg.base_seed, replication)
    f = SpeedupFunction(cfg.alpha)
    out = []
    for p in cfg.policies:
        try:
            res = simulate(w, p.kind, p.params, f, cfg.servers)
        except LivelockError as exc:
            raise LivelockError(f"replication {replication} (base seed {cfg.base_seed}): {exc}") from exc
        out.append((w.n_jobs, res.flow_time))
    return out


def _summarise(per_rep: Sequence[tuple[int, float]]) -> tuple[int, int, float, float, float, float]:
    used = [(n, fl) for n, fl in per_rep if n > 0]
    k = len(used)
    jobs = sum(n for n, _ in used)
    if k == 0:
        return 0, 0, math.nan, math.nan, math.nan, math.nan
    means = np.array([fl / n for n, fl in used])
    mean = float(np.mean(means))
    sd = float(np.std(means, ddof=1)) if k > 1 else 0.0
    ci = float(stats.t.ppf(0.975, k - 1) * sd / math.sqrt(k)) if k > 1 else math.nan
    pooled = math.fsum(fl for _, fl in used) / jobs
    return k, jobs, mean, sd, ci, pooled


def run_experiment(
    cfg: ExperimentConfig,
    progress: Optional[Callable[[int, int], None]] = None,
) -> AggregateResult:
    """Run every policy on the same workload in each replication and aggregate.

    Replication ``r`` draws its workload from ``(base_seed, r)`` alone, so
    results do not depend on the worker count or on which other policies are
    configured. Replications with no jobs are excluded from the statistics.
    """
    reps = cfg.replications
    results: dict[int, list[tuple[int, float]]] = {}
    if cfg.workers > 1 and reps > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = {r: pool.submit(_replicate, cfg, r) for r in range(reps)}
            for done, (r, fut) in enumerate(futures.items(), 1):
                results[r] = fut.result()
                if progress:
                    progress(done, reps)
    else:
        for r in range(reps):
            results[r] = _replicate(cfg, r)
            if progress:
                progress(r + 1, reps)

    rows = []
    samples = []
    for i, p in enumerate(cfg.policies):
        per_rep = tuple(results[r][i] for r in range(reps))
        k, jobs, mean, sd, ci, pooled = _summarise(per_rep)
        rows.append(ResultRow(
            p.label, p.params.beta, p.params.theta, p.params.delta, cfg.alpha, cfg.servers,
            cfg.arrival_rate, k, jobs, mean, sd, ci, pooled,
        ))
        samples.append(per_rep)
    return AggregateResult(tuple(rows), tuple(samples))


def sweep(
    template: ExperimentConfig,
    dimension: str,
    values: Sequence[float],
    progress: Optional[Callable[[int, int], None]] = None,
) -> AggregateResult:
    """One ``run_experiment`` per value; every point shares ``base_seed``, so points are paired."""
    if dimension not in SWEEP_DIMENSIONS:
        raise ConfigError(f"sweep dimension must be one of {SWEEP_DIMENSIONS}, got {dimension!r}")
    total = AggregateResult()
    for v in values:
        if dimension == "arrival_rate":
            if isinstance(template.workload, str):
                raise ConfigError("cannot sweep arrival_rate over a fixed workload file")
            cfg = replace(template, workload=replace(template.workload, arrival_rate=float(v)))
        elif dimension == "servers":
            cfg = replace(template, servers=float(v))
        else:
            pols = tuple(
                replace(p, params=replace(p.params, beta=float(v))) if p.kind is PolicyKind.FRACTIONAL_LCFS else p
                for p in template.policies
            )
            cfg = replace(template, policies=pols)
        total = total + run_experiment(cfg, progress)
    return total


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_csv(result: AggregateResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in result.rows:
        w.writerow([_cell(getattr(r, c)) for c in COLUMNS])
    return buf.getvalue()


def _json_number(x):
    # JSON has no NaN; undefined statistics become null
    return None if isinstance(x, float) and not math.isfinite(x) else x


def to_json(result: AggregateResult) -> str:
    rows = [{k: _json_number(v) for k, v in asdict(r).items()} for r in result.rows]
    return json.dumps({"columns": list(COLUMNS), "rows": rows}, indent=2) + "\n"


def emit(result: AggregateResult, fmt: str = "csv", path: Optional[Union[str, Path]] = None) -> str:
    """Write ``result`` as CSV or JSON to ``path`` (standard output when ``None``); returns the text."""
    if fmt == "csv":
        text = to_csv(result)
    elif fmt == "json":
        text = to_json(result)
    else:
        raise ConfigError(f"format must be 'csv' or 'json', got {fmt!r}")
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)
    return text


def read_csv(text: str) -> list[dict]:
    """Parse ``to_csv`` output back into typed rows."""
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        row = {}
        for k in COLUMNS:
            v = rec[k]
            if k == "policy":
                row[k] = v
            elif k in ("replications", "jobs_total"):
                row[k] = int(v)
            else:
                row[k] = float(v)
        out.append(row)
    return out


# --- configuration files ---------------------------------------------------

def _policy_from_json(obj, where: str) -> PolicySpec:
    if isinstance(obj, str):
        obj = {"kind": obj}
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError(f"{where}: expected a policy name or an object with 'kind'")
    extra = set(obj) - {"kind", "beta", "theta", "delta"}
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
    try:
        kind = PolicyKind.parse(str(obj["kind"]))
        params = PolicyParams(**{k: float(obj[k]) for k in ("beta", "theta", "delta") if k in obj})
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    return PolicySpec(kind, params)


def _workload_from_json(obj, base_dir: Path) -> WorkloadSource:
    if isinstance(obj, str):
        p = Path(obj)
        return str(p if p.is_absolute() else base_dir / p)
    if not isinstance(obj, dict):
        raise ConfigError("workload: expected an object or a file path")
    obj = dict(obj)
    kind = obj.pop("type", "profile" if "sizes" in obj else "stochastic")
    try:
        if "first_phase" in obj:
            obj["first_phase"] = FirstPhase(obj["first_phase"])
        if kind == "stochastic":
            return StochasticConfig(**obj)
        if kind == "profile":
            return ProfileConfig(**obj)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"workload: {exc}") from None
    raise ConfigError(f"workload: unknown type {kind!r}")


def config_from_dict(data: dict, base_dir: Union[str, Path] = ".") -> ExperimentConfig:
    """Build a config from a dict whose keys mirror ``ExperimentConfig`` fields."""
    if not isinstance(data, dict):
        raise ConfigError("config: expected a JSON object")
    known = {"policies", "workload", "servers", "alpha", "replications", "base_seed", "output", "workers"}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"config: unknown keys {sorted(extra)}")
    for key in ("policies", "workload"):
        if key not in data:
            raise ConfigError(f"config: missing '{key}'")
    if not isinstance(data["policies"], list):
        raise ConfigError("policies: expected a list")
    pols = tuple(_policy_from_json(p, f"policies[{i}]") for i, p in enumerate(data["policies"]))
    kwargs = {k: data[k] for k in ("servers", "alpha", "replications", "base_seed", "output", "workers") if k in data}
    try:
        return ExperimentConfig(pols, _workload_from_json(data["workload"], Path(base_dir)), **kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"config: {exc}") from None


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    p = Path(path)
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return config_from_dict(data, p.parent)
