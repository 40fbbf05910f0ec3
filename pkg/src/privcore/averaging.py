"""Private mean estimation with noise scaled to the effective diameter.

``friendly_avg`` is the primitive: it is private only across neighboring
datasets whose union is distance-r friendly (where the mean moves by at
most 2r/n), and calibrates its Gaussian noise to exactly that sensitivity.
``fc_avg`` makes it unconditionally private by filtering the input down to
a certified core first.  ``find_diam`` privately searches a geometric grid
for the smallest workable diameter when none is known.
"""

import math

import numpy as np

from .budgets import BudgetLedger
from .core import friendly_core
from .outcomes import BOTTOM
from .predicates import DistancePredicate, pairwise_sqdists
from .rng import RandomSource


def split_rho_for_avg(
    n: int, rho: float, delta: float, strategy: str = "paper"
) -> tuple[float, float]:
    """Split the averaging budget between the size gate and the mean noise.

    ``"paper"`` uses the fixed split (0.1 (1 - delta) rho, 0.9 rho).
    ``"optimized"`` picks the gate share as (sqrt(ln(1/delta)) rho / n)^(2/3)
    capped at rho/2, which roughly maximizes the expected value of the noisy
    denominator, and gives the remainder to the mean noise.
    """
    if strategy == "paper":
        return 0.1 * (1.0 - delta) * rho, 0.9 * rho
    if strategy == "optimized":
        rho1 = (math.sqrt(math.log(1.0 / delta)) * rho / n) ** (2.0 / 3.0)
        rho1 = min(rho1, 0.5 * rho)
        return rho1, rho - rho1
    raise ValueError(f"unknown rho split strategy: {strategy!r}")


def friendly_avg(
    data,
    rho: float,
    delta: float,
    r: float,
    rng: RandomSource,
    rho1_strategy: str = "paper",
):
    """Mean of the data plus spherical noise scaled to sensitivity 2r/n_hat.

    Returns ``BOTTOM`` when the dataset is empty or the noisy size lower
    bound n_hat comes out nonpositive.  Only private across neighboring
    datasets whose union is distance-r friendly; wrap with a core filter
    (``fc_avg``) for an unconditional guarantee.
    """
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if r < 0:
        raise ValueError(f"r must be nonnegative, got {r}")
    data = np.asarray(data, dtype=float)
    n = data.shape[0]
    if n == 0:
        return BOTTOM
    rho1, rho2 = split_rho_for_avg(n, rho, delta, rho1_strategy)
    n_hat = (
        n
        - math.sqrt(math.log(1.0 / delta) / rho1)
        - 1.0
        + rng.child("size").gaussian(math.sqrt(1.0 / (2.0 * rho1)))
    )
    if n_hat <= 0:
        return BOTTOM
    sigma = (2.0 * r / n_hat) / math.sqrt(2.0 * rho2)
    return data.mean(axis=0) + rng.child("mean").gaussian(sigma, size=data.shape[1])


def fc_avg(
    data,
    rho: float,
    delta: float,
    r: float,
    rng: RandomSource,
    rho1_strategy: str = "paper",
    ledger: BudgetLedger | None = None,
):
    """Unconditionally private mean: filter to a distance-r core, then average.

    Spends 0.1 rho (and delta/2) on the core filter and 0.9 rho (and
    delta/2) on the friendly averager; the composition is (rho, delta)
    end to end.
    """
    data = np.asarray(data, dtype=float)
    if data.shape[0] == 0:
        return BOTTOM
    rho1, rho2 = 0.1 * rho, 0.9 * rho
    if ledger is not None:
        ledger.record("core-filter", rho=rho1, delta=delta / 2)
        ledger.record("friendly-average", rho=rho2, delta=delta / 2)
    core = friendly_core(data, DistancePredicate(r), rho1, delta / 2, rng.child("filter"))
    return friendly_avg(core, rho2, delta / 2, r, rng.child("avg"), rho1_strategy)


def check_diam(
    data,
    rho: float,
    beta: float,
    r: float,
    rng: RandomSource,
    _sqdists: np.ndarray | None = None,
) -> int:
    """Privately test whether r covers (almost) the whole dataset.

    Averages the per-element neighbor counts at radius r, adds Gaussian
    noise of variance 2/rho, and accepts when the noisy average clears
    n - sqrt(4 ln(1/beta) / rho).
    """
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    if not 0 < beta < 1:
        raise ValueError(f"beta must be in (0, 1), got {beta}")
    data = np.asarray(data, dtype=float)
    n = data.shape[0]
    if n == 0:
        raise ValueError("dataset must be nonempty")
    sqd = pairwise_sqdists(data) if _sqdists is None else _sqdists
    s = (sqd <= r * r).sum(axis=1)
    a = s.sum() / n
    a_hat = a + rng.gaussian(math.sqrt(2.0 / rho))
    return int(a_hat >= n - math.sqrt(4.0 * math.log(1.0 / beta) / rho))


def find_diam(
    data,
    rho: float,
    beta: float,
    r_min: float,
    r_max: float,
    b: float,
    rng: RandomSource,
) -> float:
    """Private binary search for the smallest workable diameter.

    Probes the geometric grid {r_min * b^0, ..., r_min * b^ceil(t)} with
    t = log_b(r_max / r_min), giving each of the ceil(log2(grid size))
    probes an equal share of rho and beta, and returns the smallest grid
    radius the search settles on with an accepting probe.  Falls back to
    r_max when every probe rejects.
    """
    if not 0 < r_min < r_max:
        raise ValueError(f"need 0 < r_min < r_max, got {r_min}, {r_max}")
    if b <= 1:
        raise ValueError(f"base must exceed 1, got {b}")
    data = np.asarray(data, dtype=float)
    if data.shape[0] == 0:
        raise ValueError("dataset must be nonempty")
    t = math.ceil(math.log(r_max / r_min, b))
    grid_size = t + 1
    n_probes = max(1, math.ceil(math.log2(grid_size)))
    rho_probe = rho / n_probes
    beta_probe = beta / n_probes
    sqd = pairwise_sqdists(data)

    lo, hi = 0, grid_size - 1
    accepted = False
    probe_count = 0
    while lo < hi:
        mid = (lo + hi) // 2
        r = r_min * b**mid
        probe_count += 1
        if check_diam(
            data, rho_probe, beta_probe, r, rng.child(f"probe{probe_count}"), _sqdists=sqd
        ):
            accepted = True
            hi = mid
        else:
            lo = mid + 1
    if not accepted:
        return float(r_max)
    # lo == hi and hi was last set by an accepting probe, so the settled
    # grid radius itself passed its check.
    return float(r_min * b**lo)


def fc_avg_unknown_diam(
    data,
    rho: float,
    delta: float,
    beta: float,
    r_min: float,
    r_max: float,
    rng: RandomSource,
    rho1_strategy: str = "paper",
    ledger: BudgetLedger | None = None,
):
    """Private mean when only a diameter range [r_min, r_max] is known.

    Spends 0.1 rho on the diameter search (confidence beta/2) and 0.9 rho
    on the filtered average at the found radius.
    """
    data = np.asarray(data, dtype=float)
    if data.shape[0] == 0:
        return BOTTOM
    rho1, rho2 = 0.1 * rho, 0.9 * rho
    if ledger is not None:
        ledger.record("diameter-search", rho=rho1)
        ledger.record("filtered-average", rho=rho2, delta=delta)
    r = find_diam(data, rho1, beta / 2, r_min, r_max, 1.5, rng.child("diam"))
    result = fc_avg(data, rho2, delta, r, rng.child("avg"), rho1_strategy)
    return result
