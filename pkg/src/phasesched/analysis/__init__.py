from .bounds import (
    BoundResult,
    ConditionReport,
    best_delta,
    check_conditions,
    find_beta,
    lcfs_bound,
    pa_equi_bound,
    pa_equi_constants,
)
from .oracle import InstanceTooLarge, OracleResult, brute_force_opt, empirical_ratio, opt_lower_bound
from .potential import (
    DriftReport,
    JumpReport,
    PotentialEval,
    boundary_values,
    phi_online,
    phi_time_zero,
    verify_drifts_lcfs,
    verify_drifts_pa_equi,
    verify_jumps,
)
