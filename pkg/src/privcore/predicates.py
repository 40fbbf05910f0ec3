"""Reflexive closeness predicates over points and k-tuples.

A predicate decides whether two dataset elements are "friends".  The core
filters only ever consume predicates through ``pairwise``, which returns the
full boolean friendship matrix; the built-in predicates override it with
vectorized implementations.
"""

import itertools

import numpy as np


class NotMatchedError(ValueError):
    """Raised when two tuples admit no one-to-one nearest-neighbor pairing."""


class Predicate:
    """Base class for reflexive pairwise predicates.

    Subclasses set ``symmetric = False`` if ``evaluate(x, y)`` may differ
    from ``evaluate(y, x)``; the generic ``pairwise`` then evaluates both
    orientations instead of mirroring the cached upper triangle.
    """

    symmetric = True

    def evaluate(self, x, y) -> bool:
        raise NotImplementedError

    def pairwise(self, data) -> np.ndarray:
        n = len(data)
        adj = np.zeros((n, n), dtype=bool)
        for i in range(n):
            adj[i, i] = True
            start = i + 1 if self.symmetric else 0
            for j in range(start, n):
                if i == j:
                    continue
                adj[i, j] = bool(self.evaluate(data[i], data[j]))
                if self.symmetric:
                    adj[j, i] = adj[i, j]
        return adj


def eval_dist(x, y, r: float) -> int:
    """1 iff the Euclidean distance between x and y is at most r."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return int(np.linalg.norm(x - y) <= r)


def eval_dist_multi(X, Y, radii) -> int:
    """Product of per-coordinate distance bits for two k-tuples."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    radii = np.asarray(radii, dtype=float)
    if X.shape != Y.shape:
        raise ValueError(f"tuple shape mismatch: {X.shape} vs {Y.shape}")
    if len(radii) != X.shape[0]:
        raise ValueError(f"expected {X.shape[0]} radii, got {len(radii)}")
    return int(np.all(np.linalg.norm(X - Y, axis=1) <= radii))


def _nn_assignment(dists: np.ndarray):
    """Nearest-neighbor assignment pi(i) = argmin_j dists[i, j].

    Ties break to the lowest index.  Returns (pi, is_bijection).
    """
    pi = np.argmin(dists, axis=1)
    return pi, len(set(pi.tolist())) == dists.shape[0]


def _verify_match(dists: np.ndarray, pi: np.ndarray, gamma: float) -> bool:
    """Check the strict domination condition for a candidate pairing.

    For every i, the matched distance must be strictly below gamma times
    the smallest cross distance min over j != i of
    min(dists[i, pi(j)], dists[j, pi(i)]).  For k = 1 the minimum ranges
    over the empty set and the condition holds vacuously.
    """
    k = dists.shape[0]
    if k == 1:
        return True
    dp = dists[:, pi]  # dp[i, j] = ||x_i - y_pi(j)||
    cross = np.minimum(dp, dp.T)
    np.fill_diagonal(cross, np.inf)
    matched = np.diagonal(dp)
    return bool(np.all(matched < gamma * cross.min(axis=1)))


def match_gamma(X, Y, gamma: float):
    """Decide whether two unordered k-tuples match coordinate-for-coordinate.

    A match requires a permutation pi under which every point of X is more
    than a factor 1/gamma closer to its partner in Y than to any cross
    partner (strict inequality).  For gamma <= 1 a witnessing permutation,
    when one exists, is exactly the nearest-neighbor assignment, so only
    that candidate is verified.

    Returns
    -------
    (bit, pi) : tuple
        ``(1, pi)`` with the witnessing permutation as an index array, or
        ``(0, None)``.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != Y.shape:
        raise ValueError(f"tuple shape mismatch: {X.shape} vs {Y.shape}")
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must be in (0, 1], got {gamma}")
    dists = np.linalg.norm(X[:, None, :] - Y[None, :, :], axis=2)
    pi, bijective = _nn_assignment(dists)
    if not bijective or not _verify_match(dists, pi, gamma):
        return 0, None
    return 1, pi


def ord_by(X, Y) -> np.ndarray:
    """Reorder tuple Y by nearest-neighbor assignment against pivot X.

    Raises ``NotMatchedError`` when the assignment is not a bijection or
    fails the gamma = 1 domination check, i.e. when no unambiguous pairing
    between the tuples exists.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != Y.shape:
        raise ValueError(f"tuple shape mismatch: {X.shape} vs {Y.shape}")
    dists = np.linalg.norm(X[:, None, :] - Y[None, :, :], axis=2)
    pi, bijective = _nn_assignment(dists)
    if not bijective:
        raise NotMatchedError("nearest-neighbor assignment is not a bijection")
    if not _verify_match(dists, pi, 1.0):
        raise NotMatchedError("tuples have no unambiguous one-to-one pairing")
    return Y[pi]


def match_gamma_bruteforce(X, Y, gamma: float) -> int:
    """Oracle: decide a tuple match by enumerating all k! permutations."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    k = X.shape[0]
    dists = np.linalg.norm(X[:, None, :] - Y[None, :, :], axis=2)
    for perm in itertools.permutations(range(k)):
        if _verify_match(dists, np.asarray(perm), gamma):
            return 1
    return 0


class DistancePredicate(Predicate):
    """Friends iff Euclidean distance at most r (inclusive)."""

    def __init__(self, r: float):
        if r < 0:
            raise ValueError(f"r must be nonnegative, got {r}")
        self.r = float(r)

    def evaluate(self, x, y) -> bool:
        return bool(eval_dist(x, y, self.r))

    def pairwise(self, data) -> np.ndarray:
        return pairwise_sqdists(np.asarray(data, dtype=float)) <= self.r**2

    def pairwise_cross(self, rows, cols) -> np.ndarray:
        return cross_sqdists(
            np.asarray(rows, dtype=float), np.asarray(cols, dtype=float)
        ) <= self.r**2


class TupleDistancePredicate(Predicate):
    """Friends iff every tuple coordinate pair is within its radius."""

    def __init__(self, radii):
        self.radii = np.asarray(radii, dtype=float)
        if np.any(self.radii < 0):
            raise ValueError("radii must be nonnegative")

    def evaluate(self, x, y) -> bool:
        return bool(eval_dist_multi(x, y, self.radii))

    def pairwise(self, data) -> np.ndarray:
        data = np.asarray(data, dtype=float)  # (n, k, d)
        n, k, _ = data.shape
        if k != len(self.radii):
            raise ValueError(f"expected {k} radii, got {len(self.radii)}")
        adj = np.ones((n, n), dtype=bool)
        for j in range(k):
            adj &= pairwise_sqdists(data[:, j, :]) <= self.radii[j] ** 2
        return adj

    def pairwise_cross(self, rows, cols) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        cols = np.asarray(cols, dtype=float)
        adj = np.ones((rows.shape[0], cols.shape[0]), dtype=bool)
        for j in range(rows.shape[1]):
            adj &= cross_sqdists(rows[:, j, :], cols[:, j, :]) <= self.radii[j] ** 2
        return adj


class TupleMatchPredicate(Predicate):
    """Friends iff the tuples admit a gamma-dominant one-to-one pairing."""

    def __init__(self, gamma: float):
        if not 0 < gamma <= 1:
            raise ValueError(f"gamma must be in (0, 1], got {gamma}")
        self.gamma = float(gamma)

    def evaluate(self, x, y) -> bool:
        bit, _ = match_gamma(x, y, self.gamma)
        return bool(bit)

    def pairwise(self, data) -> np.ndarray:
        data = np.asarray(data, dtype=float)
        return np.eye(data.shape[0], dtype=bool) | self.pairwise_cross(data, data)

    def pairwise_cross(self, rows, cols) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        cols = np.asarray(cols, dtype=float)
        n, k = cols.shape[0], cols.shape[1]
        out = np.empty((rows.shape[0], n), dtype=bool)
        # Row blocks keep the (rows, n, k, k) distance tensor near 256 MB.
        block = max(1, int(2**25 / max(1, n * k * k)))
        for lo in range(0, rows.shape[0], block):
            hi = min(rows.shape[0], lo + block)
            out[lo:hi] = match_blocks(rows[lo:hi], cols, self.gamma)
        return out


class GraphPredicate(Predicate):
    """Predicate backed by an explicit adjacency matrix over element ids.

    Dataset elements are integer ids indexing the matrix, so restricting a
    dataset (e.g. removing one element) restricts the graph consistently.
    """

    def __init__(self, adjacency):
        adj = np.asarray(adjacency, dtype=bool)
        if adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.all(np.diagonal(adj)):
            raise ValueError("predicate must be reflexive: diagonal must be all ones")
        self.adjacency = adj
        self.symmetric = bool(np.array_equal(adj, adj.T))

    def evaluate(self, x, y) -> bool:
        return bool(self.adjacency[int(x), int(y)])

    def pairwise(self, data) -> np.ndarray:
        ids = np.asarray(data, dtype=int)
        return self.adjacency[np.ix_(ids, ids)]

    def pairwise_cross(self, rows, cols) -> np.ndarray:
        return self.adjacency[np.ix_(np.asarray(rows, dtype=int), np.asarray(cols, dtype=int))]


class CallablePredicate(Predicate):
    """Wrap a user callable f(x, y) -> bool.

    Pass ``symmetric=False`` for predicates where orientation matters; the
    pair cache is then disabled.
    """

    def __init__(self, fn, symmetric: bool = True):
        self.fn = fn
        self.symmetric = symmetric

    def evaluate(self, x, y) -> bool:
        return bool(self.fn(x, y))


def pairwise_sqdists(points: np.ndarray) -> np.ndarray:
    """Squared Euclidean distance matrix, clamped at zero against rounding."""
    sq = np.einsum("ij,ij->i", points, points)
    d2 = sq[:, None] + sq[None, :] - 2.0 * points @ points.T
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def cross_sqdists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    sq_a = np.einsum("ij,ij->i", a, a)
    sq_b = np.einsum("ij,ij->i", b, b)
    d2 = sq_a[:, None] + sq_b[None, :] - 2.0 * a @ b.T
    np.maximum(d2, 0.0, out=d2)
    return d2


def match_blocks(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    """Vectorized tuple-match bits for every pair in A x B.

    A is (a, k, d), B is (b, k, d); returns an (a, b) boolean matrix equal
    elementwise to ``match_gamma(A[i], B[j], gamma)[0]``.  Works on squared
    distances via one Gram product (the domination inequality is monotone
    under squaring, both sides being nonnegative).
    """
    a, k, d = A.shape
    b = B.shape[0]
    sq_a = np.einsum("ikd,ikd->ik", A, A)
    sq_b = np.einsum("jkd,jkd->jk", B, B)
    d2 = sq_a[:, None, :, None] + sq_b[None, :, None, :]
    d2 -= 2.0 * np.einsum("aid,bjd->abij", A, B)
    np.maximum(d2, 0.0, out=d2)  # (a, b, k, k)
    pi = np.argmin(d2, axis=3)  # (a, b, k)
    bijective = np.all(np.sort(pi, axis=2) == np.arange(k)[None, None, :], axis=2)
    if k == 1:
        return bijective
    # dp[a, b, i, j] = d2[a, b, i, pi[a, b, j]]
    dp = np.take_along_axis(d2, pi[:, :, None, :].repeat(k, axis=2), axis=3)
    cross = np.minimum(dp, dp.transpose(0, 1, 3, 2))
    idx = np.arange(k)
    cross[:, :, idx, idx] = np.inf
    matched = dp[:, :, idx, idx]
    ok = np.all(matched < gamma * gamma * cross.min(axis=3), axis=2)
    return bijective & ok
