"""Outlier filters that certify a stable, mutually-close core of a dataset.

Both filters count each element's "friends" under a reflexive predicate and
keep only elements with clearly more than half the dataset as friends.  The
deterministic-probability filter (``basic_filter``) supports the (eps,
delta) paradigm via an L1-stability bound on its keep probabilities; the
noisy-threshold filter (``zcdp_filter``) spends an explicit (rho, delta)
budget and is the preferred choice for Gaussian-mechanism pipelines.
"""

import math
from dataclasses import dataclass

import numpy as np

from .budgets import DpBudget
from .predicates import Predicate
from .rng import RandomSource


@dataclass
class FriendCounts:
    """Per-element friend counts, exact or subsample-estimated.

    In sampled mode ``counts`` holds the scaled estimates (n/m) * hits and
    the downstream centering is shifted by xi * n so that elements with at
    most n/2 true friends stay below zero except with probability delta.
    """

    counts: np.ndarray
    n: int
    mode: str = "exact"  # "exact" | "sampled"
    xi: float = 0.0

    def centered(self) -> np.ndarray:
        """Counts centered so that <= 0 means 'at most half are friends'."""
        if self.mode == "sampled":
            return self.counts - (0.5 + self.xi) * self.n
        return self.counts - 0.5 * self.n

    def full_keep_level(self, alpha: float) -> float:
        """Centered level at which an element must be kept outright."""
        if self.mode == "sampled":
            return (0.5 - alpha + self.xi) * self.n
        return (0.5 - alpha) * self.n


@dataclass
class CoreSelection:
    """Keep bits for each element, plus the deterministic keep
    probabilities when the filter defines them."""

    keep: np.ndarray
    probs: np.ndarray | None = None


def friend_counts_exact(data, predicate: Predicate) -> FriendCounts:
    """Count, for every element, how many elements are its friends.

    Counts include the element itself (predicates are reflexive), so every
    count is at least 1.
    """
    n = len(data)
    if n == 0:
        raise ValueError("dataset must be nonempty")
    adj = predicate.pairwise(data)
    return FriendCounts(counts=adj.sum(axis=1).astype(float), n=n)


def friend_counts_sampled(
    data, predicate: Predicate, xi: float, delta: float, rng: RandomSource
) -> FriendCounts:
    """Estimate friend counts from one shared subsample of the dataset.

    Draws m = ceil(ln(n / delta) / (2 xi^2)) elements without replacement
    (the same subsample for every i) and scales the hit counts by n / m.
    When m >= n the estimate would not save work, so the exact counts are
    returned instead, bit-identical to ``friend_counts_exact``.
    """
    n = len(data)
    if n == 0:
        raise ValueError("dataset must be nonempty")
    if not 0 < xi < 0.5:
        raise ValueError(f"xi must be in (0, 1/2), got {xi}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    m = math.ceil(math.log(n / delta) / (2.0 * xi**2))
    if m >= n:
        return friend_counts_exact(data, predicate)
    sample_idx = rng.child("count-subsample").subsample(n, m)
    data_arr = _as_indexable(data)
    sample = data_arr[sample_idx]
    adj = _cross_pairwise(predicate, data_arr, sample)
    counts = (n / m) * adj.sum(axis=1).astype(float)
    return FriendCounts(counts=counts, n=n, mode="sampled", xi=xi)


def basic_filter(
    data,
    predicate: Predicate,
    alpha: float,
    rng: RandomSource,
    counts: FriendCounts | None = None,
) -> CoreSelection:
    """Keep each element independently with a deterministic probability.

    The probability is 0 for elements with at most half the dataset as
    friends, 1 above the (1 - alpha) fraction, and linear in between.  The
    probability vector itself is a low-sensitivity function of the data
    (L1 shift at most 1/(1 - 2 alpha) between neighboring datasets), which
    is what the surrounding paradigm's privacy accounting consumes.
    """
    if not 0 <= alpha < 0.5:
        raise ValueError(f"alpha must be in [0, 1/2), got {alpha}")
    if counts is None:
        counts = friend_counts_exact(data, predicate)
    z = counts.centered()
    full = counts.full_keep_level(alpha)  # > 0 since alpha < 1/2 and n >= 1
    probs = np.where(z <= 0, 0.0, np.clip(z / full, 0.0, 1.0))
    keep = _per_index_bernoulli(probs, rng.child("keep"))
    return CoreSelection(keep=keep, probs=probs)


def zcdp_filter(
    data,
    predicate: Predicate,
    rho: float,
    delta: float,
    rng: RandomSource,
    counts: FriendCounts | None = None,
) -> CoreSelection:
    """Keep elements whose noisy friend count clears a noisy threshold.

    Spends 0.1 * rho on a high-probability upper bound n_hat of the dataset
    size and 0.9 * rho on the per-element noisy counts; the keep threshold
    scales with sqrt(n_hat) so that elements with at most half the dataset
    as friends survive only with probability about delta.
    """
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if counts is None:
        counts = friend_counts_exact(data, predicate)
    n = counts.n
    rho1, rho2 = 0.1 * rho, 0.9 * rho
    n_hat = (
        n
        + math.sqrt(math.log(2.0 / delta) / rho1)
        + rng.child("size").gaussian(math.sqrt(1.0 / (2.0 * rho1)))
    )
    if n_hat <= 0:
        # Threshold is undefined for a nonpositive size bound; rejecting
        # everything is the conservative completion.
        return CoreSelection(keep=np.zeros(n, dtype=bool))
    z = counts.centered()
    sigma = math.sqrt(n_hat / (8.0 * rho2))
    noise = _per_index_gaussian(n, sigma, rng.child("count"))
    # Radicand can only go negative for n_hat below delta/2; clamp it.
    radicand = max(n_hat * math.log(2.0 * n_hat / delta), 0.0) / (4.0 * rho2)
    threshold = math.sqrt(radicand) + 0.5
    keep = (z + noise) >= threshold
    return CoreSelection(keep=keep)


def friendly_core(
    data,
    predicate: Predicate,
    rho: float,
    delta: float,
    rng: RandomSource,
    counts: FriendCounts | None = None,
) -> np.ndarray:
    """Restrict the dataset to the noisy-threshold filter's core."""
    data = _as_indexable(data)
    sel = zcdp_filter(data, predicate, rho, delta, rng, counts=counts)
    return data[sel.keep]


def friendly_core_dp(
    data,
    predicate: Predicate,
    alpha: float,
    rng: RandomSource,
    counts: FriendCounts | None = None,
) -> np.ndarray:
    """Restrict the dataset to the deterministic-probability filter's core."""
    data = _as_indexable(data)
    sel = basic_filter(data, predicate, alpha, rng, counts=counts)
    return data[sel.keep]


def min_n_for_completeness(alpha: float, beta: float, delta: float, rho: float) -> int:
    """Smallest dataset size at which the noisy-threshold filter keeps,
    with probability 1 - beta, every element having at least a (1 - alpha)
    fraction of the dataset as friends.

    Evaluates ceil(-4 ln((1/2 - alpha) rho min(beta, delta))
    / ((1/2 - alpha)^2 rho)), floored at 1.
    """
    if not 0 <= alpha < 0.5:
        raise ValueError(f"alpha must be in [0, 1/2), got {alpha}")
    if not 0 < beta < 1 or not 0 < delta < 1:
        raise ValueError("beta and delta must be in (0, 1)")
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    gap = 0.5 - alpha
    value = -4.0 * math.log(gap * rho * min(beta, delta)) / (gap**2 * rho)
    return max(1, math.ceil(value))


def dp_paradigm_cost(inner: DpBudget, alpha: float) -> DpBudget:
    """End-to-end (eps, delta) cost of running a friends-only-private
    aggregator on the deterministic-probability filter's core.

    With g = 1/(1 - 2 alpha) + 1, the composition costs
    (g (e^eps - 1), g delta e^(eps + g (e^eps - 1))).
    """
    if not 0 <= alpha < 0.5:
        raise ValueError(f"alpha must be in [0, 1/2), got {alpha}")
    g = 1.0 / (1.0 - 2.0 * alpha) + 1.0
    eps_out = g * math.expm1(inner.eps)
    delta_out = g * inner.delta * math.exp(inner.eps + eps_out)
    return DpBudget(eps=eps_out, delta=delta_out)


def _as_indexable(data) -> np.ndarray:
    arr = np.asarray(data)
    return arr


def _cross_pairwise(predicate: Predicate, rows, cols) -> np.ndarray:
    """Predicate bits for rows x cols; vectorized when the predicate
    provides a cross evaluator, else elementwise."""
    pairwise = getattr(predicate, "pairwise_cross", None)
    if pairwise is not None:
        return pairwise(rows, cols)
    out = np.empty((len(rows), len(cols)), dtype=bool)
    for i, x in enumerate(rows):
        for j, y in enumerate(cols):
            out[i, j] = bool(predicate.evaluate(x, y))
    return out


def _per_index_gaussian(n: int, sigma: float, rng: RandomSource) -> np.ndarray:
    """One Gaussian draw per element from per-index child streams.

    Per-index derivation keeps results identical no matter how a caller
    parallelizes the element loop.
    """
    if rng.noise_free or sigma == 0:
        return np.zeros(n)
    return np.array([rng.child(i).gaussian(sigma) for i in range(n)])


def _per_index_bernoulli(probs: np.ndarray, rng: RandomSource) -> np.ndarray:
    out = np.empty(len(probs), dtype=bool)
    for i, p in enumerate(probs):
        if p <= 0.0:
            out[i] = False
        elif p >= 1.0:
            out[i] = True
        else:
            out[i] = rng.child(i).generator.random() < p
    return out
