"""Privacy budgets, noise-scale calibration, and budget accounting.

Two budget flavors are used throughout: zero-concentrated budgets (rho,
delta) for the Gaussian-mechanism pipelines, and classic (eps, delta)
budgets for the covariance pipeline.  All noise scales in the package are
derived from the two ``gaussian_sigma_*`` formulas below.
"""

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class ZcdpBudget:
    """A delta-approximate zero-concentrated privacy budget.

    ``rho`` may be 0 only as a degenerate value for conversions; mechanisms
    require rho > 0.
    """

    rho: float
    delta: float = 0.0

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError(f"rho must be nonnegative, got {self.rho}")
        if not 0 <= self.delta < 1:
            raise ValueError(f"delta must be in [0, 1), got {self.delta}")


@dataclass(frozen=True)
class DpBudget:
    """A classic (eps, delta) privacy budget.

    delta >= 1 denotes a vacuous guarantee; it cannot be spent (mechanisms
    require delta in (0, 1)) but can arise as a reported composition cost.
    """

    eps: float
    delta: float = 0.0

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError(f"eps must be nonnegative, got {self.eps}")
        if self.delta < 0:
            raise ValueError(f"delta must be nonnegative, got {self.delta}")


def gaussian_sigma_zcdp(sensitivity: float, rho: float) -> float:
    """Gaussian noise scale giving rho-zCDP for an L2 sensitivity bound.

    Returns sensitivity / sqrt(2 * rho).
    """
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    if sensitivity < 0:
        raise ValueError(f"sensitivity must be nonnegative, got {sensitivity}")
    return sensitivity / math.sqrt(2.0 * rho)


def gaussian_sigma_dp(sensitivity: float, eps: float, delta: float) -> float:
    """Gaussian noise scale giving (eps, delta)-DP for an L2 sensitivity bound.

    Returns sensitivity * sqrt(2 * ln(1.5 / delta)) / eps.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if sensitivity < 0:
        raise ValueError(f"sensitivity must be nonnegative, got {sensitivity}")
    return sensitivity * math.sqrt(2.0 * math.log(1.5 / delta)) / eps


def dp_to_zcdp(budget: DpBudget) -> ZcdpBudget:
    """Convert an (eps, delta)-DP guarantee to its zCDP implication."""
    return ZcdpBudget(rho=0.5 * budget.eps**2, delta=budget.delta)


def zcdp_to_dp(budget: ZcdpBudget, delta_prime: float) -> DpBudget:
    """Convert a (rho, delta)-zCDP guarantee to (eps, delta + delta')-DP."""
    if delta_prime <= 0:
        raise ValueError(f"delta_prime must be positive, got {delta_prime}")
    eps = budget.rho + 2.0 * math.sqrt(budget.rho * math.log(1.0 / delta_prime))
    return DpBudget(eps=eps, delta=budget.delta + delta_prime)


@dataclass
class BudgetLedger:
    """Accumulates the privacy allocations a pipeline hands out.

    Pipelines record every sub-budget they spend; tests assert that the
    recorded totals match the declared top-level budget.
    """

    entries: list = field(default_factory=list)

    def record(self, label: str, rho: float = 0.0, eps: float = 0.0, delta: float = 0.0):
        self.entries.append((label, float(rho), float(eps), float(delta)))

    @property
    def total_rho(self) -> float:
        return math.fsum(e[1] for e in self.entries)

    @property
    def total_eps(self) -> float:
        return math.fsum(e[2] for e in self.entries)

    @property
    def total_delta(self) -> float:
        return math.fsum(e[3] for e in self.entries)
