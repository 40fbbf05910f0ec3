"""Private aggregation of k-tuples of points.

A dataset here is an (n, k, d) array: n unordered k-tuples.  The pipeline
filters to a core of mutually matching tuples, reorders every tuple against
one pivot (legitimate exactly because on a matching-friendly core the
induced order is pivot-independent up to one global relabeling), and then
averages each of the k coordinates with a single shared size gate.
"""

import math

import numpy as np

from .averaging import find_diam, split_rho_for_avg
from .budgets import BudgetLedger
from .core import friendly_core
from .outcomes import BOTTOM
from .predicates import NotMatchedError, TupleDistancePredicate, TupleMatchPredicate, ord_by
from .rng import RandomSource

MATCH_GAMMA = 1.0 / 7.0  # matching quality under which reordering is pivot-independent


class NotFriendlyError(RuntimeError):
    """A tuple could not be aligned to the pivot: the input set was not a
    matching-friendly core."""


def friendly_reorder(tuples, rng: RandomSource) -> np.ndarray:
    """Align every tuple to the first one, then apply one global relabeling.

    The global permutation is drawn uniformly (identity in noise-free mode);
    it is part of the mechanism's output space, not a data shuffle.  Raises
    ``NotFriendlyError`` if any tuple cannot be unambiguously aligned to
    the pivot, which cannot happen on a matching-friendly input.
    """
    tuples = np.asarray(tuples, dtype=float)
    if tuples.shape[0] == 0:
        return tuples
    k = tuples.shape[1]
    pi = rng.privacy_permutation(k)
    pivot = tuples[0]
    out = np.empty_like(tuples)
    for i in range(tuples.shape[0]):
        try:
            aligned = ord_by(pivot, tuples[i])
        except NotMatchedError as exc:
            raise NotFriendlyError(
                f"tuple {i} cannot be aligned to the pivot: {exc}"
            ) from exc
        out[i] = aligned[pi]
    return out


def friendly_ord_tup_avg(
    tuples, rho: float, delta: float, radii, rng: RandomSource
):
    """Per-coordinate noisy averages of ordered tuples behind one size gate.

    Coordinate j gets Gaussian noise of scale (2 r_j / n) * sqrt(k / (2
    rho2)); the factor sqrt(k) pays for splitting the budget across the k
    coordinate averages.  Returns ``BOTTOM`` when the dataset is empty or
    the noisy size bound is nonpositive.
    """
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    tuples = np.asarray(tuples, dtype=float)
    n = tuples.shape[0]
    if n == 0:
        return BOTTOM
    k = tuples.shape[1]
    radii = np.asarray(radii, dtype=float)
    if len(radii) != k:
        raise ValueError(f"expected {k} radii, got {len(radii)}")
    rho1, rho2 = split_rho_for_avg(n, rho, delta, "paper")
    n_hat = (
        n
        - math.sqrt(math.log(1.0 / delta) / rho1)
        - 1.0
        + rng.child("size").gaussian(math.sqrt(1.0 / (2.0 * rho1)))
    )
    if n_hat <= 0:
        return BOTTOM
    out = np.empty((k, tuples.shape[2]))
    for j in range(k):
        sigma = (2.0 * radii[j] / n) * math.sqrt(k / (2.0 * rho2))
        out[j] = tuples[:, j, :].mean(axis=0) + rng.child(f"coord{j}").gaussian(
            sigma, size=tuples.shape[2]
        )
    return out


def fc_avg_ord_tup(
    tuples,
    rho: float,
    delta: float,
    beta: float,
    r_min: float,
    r_max: float,
    rng: RandomSource,
    ledger: BudgetLedger | None = None,
):
    """Private per-coordinate averages of ordered tuples, diameters unknown.

    Budget split: 0.05 rho across the k per-coordinate diameter searches,
    0.05 rho on the core filter, 0.9 rho on the gated averages.
    """
    tuples = np.asarray(tuples, dtype=float)
    if tuples.shape[0] == 0:
        return BOTTOM
    k = tuples.shape[1]
    rho1 = rho2 = 0.05 * rho
    rho3 = 0.9 * rho
    if ledger is not None:
        for j in range(k):
            ledger.record(f"diameter-search-{j}", rho=rho1 / k)
        ledger.record("core-filter", rho=rho2, delta=delta / 2)
        ledger.record("gated-averages", rho=rho3, delta=delta / 2)
    radii = np.array(
        [
            find_diam(
                tuples[:, j, :],
                rho1 / k,
                beta / (2 * k),
                r_min,
                r_max,
                1.5,
                rng.child(f"diam{j}"),
            )
            for j in range(k)
        ]
    )
    core = friendly_core(
        tuples, TupleDistancePredicate(radii), rho2, delta / 2, rng.child("filter")
    )
    return friendly_ord_tup_avg(core, rho3, delta / 2, radii, rng.child("avg"))


def fc_k_tuple_clustering(
    tuples,
    rho: float,
    delta: float,
    beta: float,
    r_min: float,
    r_max: float,
    rng: RandomSource,
    ledger: BudgetLedger | None = None,
):
    """Consensus k-tuple from a set of unordered candidate k-tuples.

    Three stages: filter to a core of mutually matching tuples (rho/2,
    delta/2), align the survivors to a pivot, then run the ordered-tuple
    averager on the rest of the budget.  Returns ``BOTTOM`` when the core
    is empty or the averager's size gate trips.
    """
    tuples = np.asarray(tuples, dtype=float)
    if tuples.shape[0] == 0:
        return BOTTOM
    if ledger is not None:
        ledger.record("match-core", rho=rho / 2, delta=delta / 2)
    core = friendly_core(
        tuples,
        TupleMatchPredicate(MATCH_GAMMA),
        rho / 2,
        delta / 2,
        rng.child("match-filter"),
    )
    if core.shape[0] == 0:
        return BOTTOM
    reordered = friendly_reorder(core, rng.child("reorder"))
    return fc_avg_ord_tup(
        reordered,
        rho / 2,
        delta / 2,
        beta / 2,
        r_min,
        r_max,
        rng.child("ord-avg"),
        ledger=ledger,
    )


def is_good_averages_solution(
    tuples, candidate, alpha: float, r_min: float, far_factor: float = 3.0 + 1e-9
) -> bool:
    """Verify that a candidate k-tuple sits near every cluster average.

    The tuple set must be partitioned by a family of far-apart balls; the
    clusters are read off by nearest-center assignment against an arbitrary
    member tuple.  The check then asks for radii r_i making balls around
    the cluster averages (a) pairwise far: ||a_i - a_j|| >= far_factor *
    max(r_i, r_j), (b) covering: every cluster-i point within r_i of a_i,
    and (c) close: ||candidate_i - a_i|| <= alpha * max(r_i, r_min) for the
    best-matching candidate coordinate.  Radii are taken as large as the
    farness constraint allows, which is the most lenient valid choice.
    """
    tuples = np.asarray(tuples, dtype=float)
    candidate = np.asarray(candidate, dtype=float)
    n, k, d = tuples.shape
    if candidate.shape != (k, d):
        raise ValueError(f"candidate must be ({k}, {d}), got {candidate.shape}")
    pivot = tuples[0]
    points = tuples.reshape(n * k, d)
    labels = np.argmin(
        np.linalg.norm(points[:, None, :] - pivot[None, :, :], axis=2), axis=1
    )
    # A valid partition has exactly one point per tuple in each cluster.
    per_tuple = labels.reshape(n, k)
    if not all(len(set(row.tolist())) == k for row in per_tuple):
        return False
    averages = np.stack([points[labels == i].mean(axis=0) for i in range(k)])
    sep = np.linalg.norm(averages[:, None, :] - averages[None, :, :], axis=2)
    np.fill_diagonal(sep, np.inf)
    radii = sep.min(axis=1) / far_factor
    for i in range(k):
        cluster = points[labels == i]
        if np.any(np.linalg.norm(cluster - averages[i], axis=1) > radii[i]):
            return False
    order = np.argmin(
        np.linalg.norm(candidate[:, None, :] - averages[None, :, :], axis=2), axis=1
    )
    if len(set(order.tolist())) != k:
        return False
    for j in range(k):
        i = order[j]
        if np.linalg.norm(candidate[j] - averages[i]) > alpha * max(radii[i], r_min):
            return False
    return True
