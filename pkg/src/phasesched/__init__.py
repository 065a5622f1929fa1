"""Simulation and analysis of parallel jobs whose phases alternate between
elastic (any number of servers, concave speedup) and in-elastic (one server).
"""

from .core import (
    Allocation,
    ContractViolation,
    DomainError,
    JobSpec,
    JobState,
    PhaseKind,
    PhaseSpec,
    Share,
    SpeedupFunction,
    SystemSnapshot,
    advance,
    speedup_p,
    speedup_p_inverse,
    speedup_q,
)
from .engine import Event, EventKind, LivelockError, Trace, next_event, run
from .experiment import (
    AggregateResult,
    ConfigError,
    ExperimentConfig,
    PolicySpec,
    emit,
    load_config,
    run_experiment,
    sweep,
)
from .fast import simulate
from .schedulers import (
    PolicyKind,
    PolicyParams,
    allocate,
    blind_equi,
    check_feasible,
    fractional_lcfs,
    inelastic_first,
    pa_equi,
    pa_fcfs,
)
from .workload import (
    FirstPhase,
    ProfileConfig,
    StochasticConfig,
    generate_profile,
    generate_stochastic,
    load_workload,
    save_workload,
)

__version__ = "0.1.0"
