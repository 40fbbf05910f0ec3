"""End-to-end private clustering by sample-and-aggregate.

The data is shuffled and split into t pieces, a non-private oracle produces
a candidate k-tuple of centers per piece, the tuples are privately fused
into one consensus tuple, and a final noisy Lloyd step refines the centers
against the full dataset.
"""

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .averaging import friendly_avg
from .budgets import BudgetLedger
from .outcomes import is_bottom
from .rng import RandomSource
from .tuples import fc_k_tuple_clustering


@dataclass
class ClusteringResult:
    """Private centers plus the cost on the input, or a failure marker.

    ``status`` is ``"success"`` or ``"fallback-failure"`` (the consensus
    stage aborted; no backup clusterer is run).
    """

    centers: np.ndarray | None
    cost: float | None
    status: str

    @property
    def failed(self) -> bool:
        return self.status != "success"


def kmeans_pp(data, k: int, rng: RandomSource, lloyd_iters: int = 20) -> np.ndarray:
    """k-means++ seeding followed by Lloyd refinement.

    Deterministic given the random source.  Empty clusters are reseeded to
    the point farthest from its assigned center.
    """
    data = np.asarray(data, dtype=float)
    n = data.shape[0]
    if n < k:
        raise ValueError(f"need at least k={k} points, got {n}")
    gen = rng.generator
    centers = np.empty((k, data.shape[1]))
    centers[0] = data[gen.integers(n)]
    closest = _sqdist_to(data, centers[0])
    for i in range(1, k):
        total = closest.sum()
        if total <= 0:
            centers[i:] = data[gen.choice(n, size=k - i)]
            break
        centers[i] = data[gen.choice(n, p=closest / total)]
        np.minimum(closest, _sqdist_to(data, centers[i]), out=closest)
    return _lloyd(data, centers, lloyd_iters)


def pca_gmm_cluster(data, k: int, rng: RandomSource) -> np.ndarray:
    """Cluster in the top-k principal subspace, then refine in full dimension.

    The subspace comes from power iteration with deflation on the sample
    covariance, the subspace clustering from k-means++, and the result is
    mapped back by one full-dimension Lloyd step.
    """
    data = np.asarray(data, dtype=float)
    n, d = data.shape
    if n < k:
        raise ValueError(f"need at least k={k} points, got {n}")
    mean = data.mean(axis=0)
    centered = data - mean
    cov = centered.T @ centered / n
    comps = _top_components(cov, min(k, d), rng)
    projected = centered @ comps.T
    sub_centers = kmeans_pp(projected, k, rng.child("subspace"))
    labels = np.argmin(
        ((projected[:, None, :] - sub_centers[None, :, :]) ** 2).sum(axis=2), axis=1
    )
    centers = np.stack(
        [
            data[labels == i].mean(axis=0) if np.any(labels == i) else mean
            for i in range(k)
        ]
    )
    return _lloyd(data, centers, 1)


def noisy_lloyd_step(
    data, centers, rho: float, delta: float, norm_bound: float, rng: RandomSource
) -> np.ndarray:
    """One private Lloyd step: partition by nearest center, average each part.

    Points with norm above ``norm_bound`` are dropped first.  Each part is
    averaged by the friendly averager with radius 2 * norm_bound and the
    full (rho, delta) budget (neighboring datasets touch one part only).
    A part whose averager aborts keeps its incoming center, so the step is
    total.
    """
    if norm_bound <= 0:
        raise ValueError(f"norm_bound must be positive, got {norm_bound}")
    data = np.asarray(data, dtype=float)
    centers = np.asarray(centers, dtype=float)
    k = centers.shape[0]
    kept = data[np.linalg.norm(data, axis=1) <= norm_bound]
    out = centers.copy()
    if kept.shape[0] == 0:
        return out
    dists = ((kept[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(dists, axis=1)
    for i in range(k):
        part = kept[labels == i]
        est = friendly_avg(part, rho, delta, 2.0 * norm_bound, rng.child(f"part{i}"))
        if not is_bottom(est):
            out[i] = est
    return out


def fc_clustering(
    data,
    k: int,
    rho: float,
    delta: float,
    beta: float,
    r_min: float,
    norm_bound: float,
    t: int,
    oracle,
    rng: RandomSource,
    ledger: BudgetLedger | None = None,
) -> ClusteringResult:
    """Private k-clustering via oracle tuples, consensus, and a Lloyd step.

    Parameters
    ----------
    oracle : str or callable
        Either a name from ``ORACLES`` ("kmeans++", "pca") or any function
        (data, k, rng) -> (k, d) array of centers.
    t : int
        Number of pieces the shuffled data is split into; each piece of
        size floor(n/t) feeds one oracle run.  Leftover points skip the
        oracle stage but still join the final Lloyd step.
    """
    data = np.asarray(data, dtype=float)
    n = data.shape[0]
    if not 1 <= t <= n:
        raise ValueError(f"need 1 <= t <= n, got t={t}, n={n}")
    oracle_fn = ORACLES.get(oracle, oracle) if isinstance(oracle, str) else oracle
    if not callable(oracle_fn):
        raise ValueError(f"unknown oracle: {oracle!r}")
    if ledger is not None:
        ledger.record("tuple-consensus", rho=rho / 2, delta=delta / 2)
        ledger.record("lloyd-step", rho=rho / 2, delta=delta / 2)

    shuffled = data[rng.child("shuffle").shuffle_indices(n)]
    m = n // t
    pieces = [shuffled[i * m : (i + 1) * m] for i in range(t)]
    tuples = np.stack(
        [oracle_fn(piece, k, rng.child(f"oracle{i}")) for i, piece in enumerate(pieces)]
    )
    consensus = fc_k_tuple_clustering(
        tuples,
        rho / 2,
        delta / 2,
        beta,
        r_min,
        2.0 * norm_bound,
        rng.child("consensus"),
    )
    if is_bottom(consensus):
        return ClusteringResult(centers=None, cost=None, status="fallback-failure")
    centers = noisy_lloyd_step(
        data, consensus, rho / 2, delta / 2, norm_bound, rng.child("lloyd")
    )
    return ClusteringResult(
        centers=centers, cost=kmeans_cost(data, centers), status="success"
    )


def kmeans_cost(data, centers, squared: bool = True) -> float:
    """Clustering cost: sum over points of the (squared) distance to the
    nearest center."""
    data = np.asarray(data, dtype=float)
    centers = np.asarray(centers, dtype=float)
    d2 = ((data[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2).min(axis=1)
    return float(d2.sum()) if squared else float(np.sqrt(d2).sum())


def labeling_accuracy(true_labels, centers, data) -> float:
    """Best label agreement between the induced clustering and the truth.

    Maximized over all label permutations for k <= 8, and by optimal
    assignment on the confusion matrix above that.
    """
    data = np.asarray(data, dtype=float)
    centers = np.asarray(centers, dtype=float)
    true_labels = np.asarray(true_labels, dtype=int)
    k = centers.shape[0]
    pred = np.argmin(
        ((data[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2), axis=1
    )
    confusion = np.zeros((k, k))
    for t_lab, p_lab in zip(true_labels, pred):
        confusion[t_lab, p_lab] += 1
    if k <= 8:
        best = max(
            sum(confusion[i, perm[i]] for i in range(k))
            for perm in itertools.permutations(range(k))
        )
    else:
        rows, cols = linear_sum_assignment(-confusion)
        best = confusion[rows, cols].sum()
    return float(best / len(true_labels))


def _sqdist_to(data: np.ndarray, center: np.ndarray) -> np.ndarray:
    return ((data - center) ** 2).sum(axis=1)


def _lloyd(data: np.ndarray, centers: np.ndarray, iters: int) -> np.ndarray:
    centers = centers.copy()
    k = centers.shape[0]
    for _ in range(iters):
        dists = ((data[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = np.argmin(dists, axis=1)
        moved = 0.0
        for i in range(k):
            members = data[labels == i]
            if members.shape[0] == 0:
                # Reseed an empty cluster to the worst-served point.
                far = np.argmax(dists[np.arange(len(data)), labels])
                new = data[far]
            else:
                new = members.mean(axis=0)
            moved = max(moved, float(np.linalg.norm(new - centers[i])))
            centers[i] = new
        if moved <= 1e-12:
            break
    return centers


def _top_components(cov: np.ndarray, k: int, rng: RandomSource, iters: int = 200) -> np.ndarray:
    """Top-k eigenvectors of a symmetric PSD matrix by power iteration with
    deflation.  Rows are unit vectors."""
    d = cov.shape[0]
    work = cov.copy()
    comps = np.empty((k, d))
    gen = rng.child("power").generator
    for c in range(k):
        v = gen.standard_normal(d)
        v /= np.linalg.norm(v)
        for _ in range(iters):
            w = work @ v
            norm = np.linalg.norm(w)
            if norm <= 1e-14:
                break
            w /= norm
            if np.linalg.norm(w - v) <= 1e-12:
                v = w
                break
            v = w
        comps[c] = v
        lam = float(v @ work @ v)
        work = work - lam * np.outer(v, v)
    return comps


ORACLES = {
    "kmeans++": kmeans_pp,
    "pca": pca_gmm_cluster,
}
