"""Private covariance estimation for unbounded positive-definite targets.

Works on a scale-free closeness measure between PD matrices (conjugated
deviation from the identity, in operator norm), so no bound on the norm of
the target covariance is needed.  The release mechanism multiplies the
matrix square root by a Gaussian perturbation on both sides, which keeps
the output PSD by construction and makes the noise relative rather than
additive.
"""

import math

import numpy as np
from scipy.linalg import solve_triangular

from .core import friendly_core_dp
from .outcomes import BOTTOM
from .predicates import Predicate
from .rng import RandomSource

# Calibrated by tools/calibrate_covariance_constants.py: smallest powers of
# two meeting the stated success rates at d in {2, 5, 10}.  See README.
DEFAULT_C1 = 0.5
DEFAULT_C2 = 4096.0
DEFAULT_C3 = 64.0

_PD_TOL = 1e-10


def sym_eigen(M, tol: float = 5e-15) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) with eigenvalues sorted descending
    and eigenvectors as the corresponding columns.  Reconstruction error
    ||Q diag(w) Q^T - M||_F stays below 1e-8 * (1 + ||M||_F).
    """
    M = np.asarray(M, dtype=float)
    d = M.shape[0]
    if M.ndim != 2 or M.shape != (d, d):
        raise ValueError(f"matrix must be square, got {M.shape}")
    scale = float(np.abs(M).max()) if M.size else 0.0
    if not np.allclose(M, M.T, atol=1e-12 * max(1.0, scale)):
        raise ValueError("matrix must be symmetric")
    A = 0.5 * (M + M.T)
    V = np.eye(d)
    if d == 1:
        return A.diagonal().copy(), V
    off_limit = tol * max(1.0, float(np.linalg.norm(A)))
    for _ in range(100):  # sweep cap; convergence is quadratic
        off = math.sqrt(max(0.0, float((A**2).sum() - (A.diagonal() ** 2).sum())))
        if off <= off_limit:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                if abs(apq) <= off_limit / (d * d):
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (
                    abs(theta) + math.sqrt(theta * theta + 1.0)
                )
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                new_p = c * A[:, p] - s * A[:, q]
                new_q = s * A[:, p] + c * A[:, q]
                A[:, p], A[:, q] = new_p, new_q
                new_p = c * A[p, :] - s * A[q, :]
                new_q = s * A[p, :] + c * A[q, :]
                A[p, :], A[q, :] = new_p, new_q
                A[p, q] = A[q, p] = 0.0
                new_p = c * V[:, p] - s * V[:, q]
                new_q = s * V[:, p] + c * V[:, q]
                V[:, p], V[:, q] = new_p, new_q
    w = A.diagonal().copy()
    order = np.argsort(w)[::-1]
    return w[order], V[:, order]


def _sqrt_and_invsqrt(S: np.ndarray):
    """(S^1/2, S^-1/2, ok); ok is False when S is not numerically PD."""
    w, Q = sym_eigen(S)
    if w[-1] <= _PD_TOL * max(1.0, w[0]):
        return None, None, False
    root = (Q * np.sqrt(w)) @ Q.T
    inv_root = (Q / np.sqrt(w)) @ Q.T
    return root, inv_root, True


def matrix_dist(S1, S2) -> float:
    """Scale-free closeness of two PSD matrices.

    max over both orderings of ||S_b^-1/2 S_a S_b^-1/2 - I|| in operator
    norm; +inf when either matrix is not strictly positive definite.
    Invariant under joint rescaling S -> lam * S, and symmetric.
    """
    S1 = np.asarray(S1, dtype=float)
    S2 = np.asarray(S2, dtype=float)
    # Normalize by the joint trace (the value is invariant under joint
    # rescaling) and evaluate in a canonical argument order (the value is
    # symmetric); both properties then hold in floats, not just on paper.
    scale = (np.trace(S1) + np.trace(S2)) / (2.0 * max(1, S1.shape[0]))
    if scale > 0 and np.isfinite(scale):
        S1 = S1 / scale
        S2 = S2 / scale
    if (np.trace(S2), S2.tobytes()) < (np.trace(S1), S1.tobytes()):
        S1, S2 = S2, S1
    for S in (S1, S2):
        w = sym_eigen(S)[0]
        if w[-1] <= _PD_TOL * max(1.0, w[0]):
            return math.inf
    # Reduce the pencil (S1, S2) by Cholesky rather than an inverse square
    # root: triangular solves keep the reduction backward stable even for
    # ill-conditioned pairs.
    try:
        L = np.linalg.cholesky(S2)
    except np.linalg.LinAlgError:
        return math.inf
    half = solve_triangular(L, S1, lower=True)
    conj = solve_triangular(L, half.T, lower=True)
    conj = 0.5 * (conj + conj.T)
    w, _ = sym_eigen(conj)
    lam_max, lam_min = float(w[0]), float(w[-1])
    if lam_min <= 0:
        return math.inf
    # The reverse conjugation has eigenvalues 1/lam, so both orderings
    # reduce to max(lam_max - 1, 1/lam_min - 1).
    return max(lam_max - 1.0, 1.0 / lam_min - 1.0)


def gamma_threshold(eta: float, eps: float, delta: float, d: int) -> float:
    """Closeness level under which the perturbation release is
    (eps, delta)-indistinguishable.

    The minimum of four terms:
      sqrt(eps / (2 d (d + 1/eta^2))),  eps / (8 d sqrt(ln(1/delta))),
      eps / (8 ln(2/delta)),            eps eta / (12 sqrt(d ln(2/delta))).
    """
    if eta <= 0 or eps <= 0 or d <= 0:
        raise ValueError("eta, eps, and d must be positive")
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    return min(
        math.sqrt(eps / (2.0 * d * (d + 1.0 / eta**2))),
        eps / (8.0 * d * math.sqrt(math.log(1.0 / delta))),
        eps / (8.0 * math.log(2.0 / delta)),
        eps * eta / (12.0 * math.sqrt(d * math.log(2.0 / delta))),
    )


def b_eta(S, eta: float, rng: RandomSource) -> np.ndarray:
    """Multiplicative Gaussian perturbation of a PSD matrix.

    Returns S^1/2 (I + eta G)(I + eta G)^T S^1/2 with G a matrix of
    independent standard normals; symmetric PSD by construction, and equal
    to S exactly in noise-free mode.
    """
    S = np.asarray(S, dtype=float)
    d = S.shape[0]
    w, Q = sym_eigen(S)
    root = (Q * np.sqrt(np.maximum(w, 0.0))) @ Q.T
    M = np.eye(d) + eta * rng.normal_matrix((d, d))
    out = root @ M @ M.T @ root
    return 0.5 * (out + out.T)


def friendly_covariance(
    matrices,
    eps: float,
    delta: float,
    eta: float,
    rng: RandomSource,
    c1: float = DEFAULT_C1,
):
    """Perturbation release of the mean of a set of close PD matrices.

    Gates on a noisy size estimate: with gamma the closeness level from
    ``gamma_threshold`` at (eta, 0.9 eps, delta e^{-0.1 eps}), the mean of
    n pairwise-0.3-close matrices moves by at most gamma under element
    removal once n exceeds c1 / gamma, which is exactly the stability the
    release needs.  Returns ``BOTTOM`` when the dataset is empty or the
    noisy size does not clear c1 / gamma.  Only private across neighboring
    datasets whose union is 0.1-close friendly; wrap with the core filter
    (``fc_covariance``) for an unconditional guarantee.
    """
    if eps <= 0 or not 0 < delta < 1:
        raise ValueError("need eps > 0 and delta in (0, 1)")
    matrices = np.asarray(matrices, dtype=float)
    n = matrices.shape[0]
    if n == 0:
        return BOTTOM
    d = matrices.shape[1]
    if matrices.shape[1:] != (d, d):
        raise ValueError(f"expected square matrices, got shape {matrices.shape}")
    eps1, eps2 = 0.1 * eps, 0.9 * eps
    gamma = gamma_threshold(eta, eps2, delta * math.exp(-eps1), d)
    n_hat = n - math.log(1.0 / delta) / eps1 + rng.child("size").laplace(1.0 / eps1)
    if n_hat <= c1 / gamma:
        return BOTTOM
    return b_eta(matrices.mean(axis=0), eta, rng.child("release"))


def empirical_cov_pieces(points, t: int) -> np.ndarray:
    """Second-moment matrices of t equal pieces of the point sequence.

    Piece i covers rows [i*m, (i+1)*m) with m = floor(n/t); leftover rows
    are unused.
    """
    points = np.asarray(points, dtype=float)
    n, d = points.shape
    if not 1 <= t <= n:
        raise ValueError(f"need 1 <= t <= n, got t={t}, n={n}")
    m = n // t
    used = points[: t * m].reshape(t, m, d)
    return np.einsum("tmi,tmj->tij", used, used) / m


def fc_covariance_from_pieces(
    matrices,
    eps: float,
    delta: float,
    eta: float,
    rng: RandomSource,
    c1: float = DEFAULT_C1,
):
    """Filter piece covariances to a mutually close core, then release.

    This is the aggregation stage of ``fc_covariance``, exposed separately
    so callers already holding per-piece covariance matrices (or draws
    from the same distribution) can enter the pipeline here.
    """
    matrices = np.asarray(matrices, dtype=float)
    core = friendly_core_dp(
        matrices, MatrixClosenessPredicate(0.1), 0.0, rng.child("filter")
    )
    return friendly_covariance(core, eps, delta, eta, rng.child("release"), c1)


def fc_covariance(
    points,
    eps: float,
    delta: float,
    t: int,
    eta: float,
    rng: RandomSource,
    c1: float = DEFAULT_C1,
):
    """End-to-end private covariance estimate from raw points.

    Splits the points into t pieces, forms each piece's empirical second
    moment, keeps only pieces 0.1-close to more than half the others, and
    releases the perturbed mean of the survivors.  The end-to-end cost is
    the deterministic-filter paradigm cost at alpha = 0, i.e.
    (2(e^eps - 1), 2 delta e^{eps + 2(e^eps - 1)})-DP; see
    ``privcore.core.dp_paradigm_cost``.
    """
    pieces = empirical_cov_pieces(points, t)
    return fc_covariance_from_pieces(pieces, eps, delta, eta, rng, c1)


def recommended_eta(d: int, beta: float, c3: float = DEFAULT_C3) -> float:
    """Perturbation scale keeping the release within 1/30 of its input with
    probability 1 - beta/3."""
    return 1.0 / (c3 * (math.sqrt(d) + math.sqrt(math.log(6.0 / beta))))


def recommended_piece_size(d: int, beta: float, c2: float = DEFAULT_C2) -> int:
    """Piece size keeping each empirical covariance within 1/30 of the truth
    with probability 1 - beta/3."""
    return math.ceil(c2 * (d + math.log(6.0 / beta)))


def recommended_piece_count(
    d: int, eps: float, delta: float, beta: float, eta: float, c1: float = DEFAULT_C1
) -> int:
    """Piece count clearing the release gate with probability 1 - beta/3.

    The gate aborts when n - ln(1/delta)/(0.1 eps) + Lap(1/(0.1 eps)) falls
    at or below c1/gamma, so both correction terms scale with 1/(0.1 eps).
    """
    gamma = gamma_threshold(eta, 0.9 * eps, delta * math.exp(-0.1 * eps), d)
    eps1 = 0.1 * eps
    slack = math.log(3.0 / (2.0 * beta)) / eps1  # Laplace tail at beta/3
    return math.ceil(c1 / gamma + math.log(1.0 / delta) / eps1 + slack)


class MatrixClosenessPredicate(Predicate):
    """Friends iff two PSD matrices are gamma-close in the scale-free sense.

    The vectorized path whitens all matrices against a common reference and
    screens pairs by their whitened eigenvalue intervals: for intervals
    [lo, hi], every generalized eigenvalue of a pair (i, j) lies in
    [lo_i/hi_j, hi_i/lo_j] and reaches at least max(hi_i/hi_j, lo_i/lo_j),
    so most pairs resolve without a per-pair eigensolve.  Batched solves
    (numpy) cover the rest; the single-pair ``matrix_dist`` keeps its own
    rotation-based solver, and the two are cross-checked in tests.
    """

    def __init__(self, gamma: float):
        if gamma <= 0:
            raise ValueError(f"gamma must be positive, got {gamma}")
        self.gamma = float(gamma)

    def evaluate(self, x, y) -> bool:
        return matrix_dist(x, y) <= self.gamma

    def pairwise(self, data) -> np.ndarray:
        data = np.asarray(data, dtype=float)
        if data.shape[0] < 16:
            return super().pairwise(data)
        return self._pairwise_screened(data)

    def _pairwise_screened(self, mats: np.ndarray) -> np.ndarray:
        n = mats.shape[0]
        bound = 1.0 + self.gamma
        sym = 0.5 * (mats + mats.transpose(0, 2, 1))
        ref = sym.mean(axis=0)
        _, ref_inv, ref_ok = _sqrt_and_invsqrt(0.5 * (ref + ref.T))
        if ref_ok:
            white = np.einsum("ab,nbc,cd->nad", ref_inv, sym, ref_inv)
            white = 0.5 * (white + white.transpose(0, 2, 1))
        else:
            white = sym
        vals = np.linalg.eigvalsh(white)
        lo, hi = vals[:, 0], vals[:, -1]
        pd_ok = lo > _PD_TOL * np.maximum(1.0, hi)
        safe_lo = np.where(pd_ok, lo, 1.0)
        safe_hi = np.where(pd_ok, hi, 1.0)
        if bool(np.all(pd_ok)) and float(safe_hi.max()) <= bound * float(safe_lo.min()):
            return np.ones((n, n), dtype=bool)  # every pair certainly within

        adj = np.zeros((n, n), dtype=bool)
        pending_i: list[np.ndarray] = []
        pending_j: list[np.ndarray] = []
        block = max(1, 2**22 // n)  # keep per-block temporaries modest
        for lo_row in range(0, n, block):
            hi_row = min(n, lo_row + block)
            rows = slice(lo_row, hi_row)
            sure_in = (
                (pd_ok[rows, None] & pd_ok[None, :])
                & (safe_hi[rows, None] <= bound * safe_lo[None, :])
                & (safe_hi[None, :] <= bound * safe_lo[rows, None])
            )
            # lam_max >= max(hi_i/hi_j, lo_i/lo_j) in both orientations.
            lam_lb = np.maximum(
                safe_hi[rows, None] / safe_hi[None, :],
                safe_lo[rows, None] / safe_lo[None, :],
            )
            lam_lb = np.maximum(
                lam_lb,
                np.maximum(
                    safe_hi[None, :] / safe_hi[rows, None],
                    safe_lo[None, :] / safe_lo[rows, None],
                ),
            )
            sure_out = (
                ~(pd_ok[rows, None] & pd_ok[None, :]) | (lam_lb - 1.0 > self.gamma)
            )
            adj[rows] = sure_in
            bi, bj = np.nonzero(~(sure_in | sure_out))
            keep = (bi + lo_row) < bj  # resolve each unordered pair once
            pending_i.append(bi[keep] + lo_row)
            pending_j.append(bj[keep])
        np.fill_diagonal(adj, True)
        idx_i = np.concatenate(pending_i) if pending_i else np.empty(0, dtype=int)
        idx_j = np.concatenate(pending_j) if pending_j else np.empty(0, dtype=int)
        if len(idx_i):
            bits = self._exact_pairs(white, idx_i, idx_j)
            adj[idx_i, idx_j] = bits
            adj[idx_j, idx_i] = bits
        adj |= adj.T  # certain decisions are symmetric by construction
        return adj

    def _exact_pairs(self, white, idx_i, idx_j) -> np.ndarray:
        w_j, q_j = np.linalg.eigh(white[idx_j])
        inv_roots = np.einsum(
            "nab,nb,ncb->nac", q_j, 1.0 / np.sqrt(np.maximum(w_j, 1e-300)), q_j
        )
        conj = np.einsum("nab,nbc,ncd->nad", inv_roots, white[idx_i], inv_roots)
        conj = 0.5 * (conj + conj.transpose(0, 2, 1))
        vals = np.linalg.eigvalsh(conj)
        lam_min, lam_max = vals[:, 0], vals[:, -1]
        dev = np.maximum(lam_max - 1.0, 1.0 / np.maximum(lam_min, 1e-300) - 1.0)
        return dev <= self.gamma
