"""Competitive-ratio constants for Fractional-LCFS and PA-EQUI."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from ..core import DomainError, SpeedupFunction

# constants quoted for alpha=2, beta=1/6, theta=gamma=1/72
PUBLISHED_C1 = 6.06
PUBLISHED_C2 = 127.44
PUBLISHED_KAPPA = 635.76

COND1 = "cond1"
COND2 = "cond2"
COND3A = "cond3a"
COND3B = "cond3b"
DOMAIN = "domain"


@dataclass(frozen=True)
class ConditionReport:
    alpha: float
    beta: float
    theta: float
    gamma: float
    cond1_lhs: float
    cond3a_lhs: float
    rhs: float
    min_c1: Optional[float]
    min_c2: Optional[float]
    satisfied: dict = field(default_factory=dict)

    @property
    def violated(self) -> list[str]:
        return [k for k, ok in self.satisfied.items() if not ok]

    @property
    def all_satisfied(self) -> bool:
        return all(self.satisfied.values())


@dataclass(frozen=True)
class BoundResult:
    alpha: float
    beta: float
    theta: float
    gamma: float
    delta: Optional[float]
    c1: Optional[float]
    c2: Optional[float]
    kappa: Optional[float]
    feasible: bool
    violated_conditions: tuple[str, ...] = ()


def check_conditions(alpha: float, beta: float, theta: float, gamma: float) -> ConditionReport:
    """Evaluate the parameter conditions behind the Fractional-LCFS bound.

    The two strict inequalities are checked numerically; the two constant
    requirements are reported as the smallest admissible ``c1`` and ``c2``.
    """
    f = SpeedupFunction(alpha)
    in_domain = 0 < theta and 0 < gamma and theta + gamma < beta < 1
    pb = f.p(beta) if beta > 0 else float("nan")
    rhs = f.q(gamma) if gamma >= 0 else float("nan")
    lhs1 = (1 - beta) * (beta - gamma) / pb
    lhs3 = (1 - beta) * (beta - theta - gamma) / pb
    ok1 = lhs1 > rhs
    ok3a = lhs3 > rhs
    min_c1 = 1.0 / (lhs3 - rhs) if ok3a else None
    min_c2 = (1.0 + min_c1 * rhs) / theta if (min_c1 is not None and theta > 0) else None
    satisfied = {
        DOMAIN: in_domain,
        COND1: ok1,
        COND3A: ok3a,
        COND3B: min_c1 is not None,
        COND2: min_c2 is not None,
    }
    return ConditionReport(alpha, beta, theta, gamma, lhs1, lhs3, rhs, min_c1, min_c2, satisfied)


def lcfs_bound(alpha: float, beta: float, theta: float, gamma: float) -> BoundResult:
    """``kappa = (1 + c1)/gamma + c2`` with ``c1``, ``c2`` at their smallest admissible values."""
    rep = check_conditions(alpha, beta, theta, gamma)
    if not rep.all_satisfied:
        return BoundResult(alpha, beta, theta, gamma, None, rep.min_c1, rep.min_c2, None, False, tuple(rep.violated))
    c1 = rep.min_c1
    c2 = rep.min_c2
    kappa = (1.0 + c1) / gamma + c2
    return BoundResult(alpha, beta, theta, gamma, None, c1, c2, kappa, True, ())


def lcfs_beta_inequality(alpha: float, beta: float) -> bool:
    return (1.0 - beta) ** 2 > (beta / 2.0) ** (1.0 - 1.0 / alpha)


def find_beta(alpha: float, step: float = 1e-4) -> tuple[float, float, float]:
    """Largest ``beta`` on a grid with ``theta = gamma = beta**2 / 2`` admissible.

    With that choice of ``theta`` and ``gamma`` the binding condition reduces
    to ``(1 - beta)**2 > (beta / 2)**(1 - 1/alpha)``; its left side falls and
    its right side rises in ``beta``, so the admissible set is an interval
    starting at 0 and the scan stops at the first failure.
    """
    SpeedupFunction(alpha)
    k_max = int(round(1.0 / step)) - 1
    best = None
    for k in range(1, k_max + 1):
        beta = k * step
        if lcfs_beta_inequality(alpha, beta):
            best = beta
        else:
            break
    if best is None:
        raise DomainError(f"no admissible beta on a grid of step {step} for alpha={alpha}")
    g = best * best / 2.0
    return best, g, g


def pa_equi_bound(alpha: float, delta: float) -> float:
    """Closed-form ratio bound for PA-EQUI with every job present at time 0."""
    SpeedupFunction(alpha)
    if not (0.0 < delta < 1.0):
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    a = alpha * (1.0 - delta)
    if a <= 1.0:
        raise DomainError(f"bound undefined: alpha*(1-delta) = {a} <= 1")
    return (a / delta + (a + delta) / (1.0 - delta)) / (a - 1.0)


def pa_equi_constants(alpha: float, delta: float) -> tuple[float, float]:
    """Smallest ``c1``, ``c2`` admitted by the PA-EQUI running-condition cases."""
    a = alpha * (1.0 - delta)
    if a <= 1.0:
        raise DomainError(f"constants undefined: alpha*(1-delta) = {a} <= 1")
    c1 = alpha / (a - 1.0)
    c2 = (1.0 + c1 / alpha) / delta
    return c1, c2


def best_delta(alpha: float, step: float = 1e-3) -> tuple[float, float]:
    """Grid minimiser of the PA-EQUI bound over ``delta``; returns ``(delta, bound)``."""
    best = (math.nan, math.inf)
    k_max = int(round(1.0 / step)) - 1
    for k in range(1, k_max + 1):
        d = k * step
        if alpha * (1.0 - d) <= 1.0:
            break
        mu = pa_equi_bound(alpha, d)
        if mu < best[1]:
            best = (d, mu)
    if not math.isfinite(best[1]):
        raise DomainError(f"no admissible delta for alpha={alpha}")
    return best
