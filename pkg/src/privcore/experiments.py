"""Experiment runner: repeated private aggregation with trimmed reporting.

A spec names a task, data-generation parameters, a privacy budget, and a
repetition count; the runner executes every repetition from an independent
child seed (optionally in parallel, with identical results either way) and
aggregates the per-repetition metric as a trimmed mean between two
quantiles.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from .averaging import fc_avg, fc_avg_unknown_diam
from .clustering import fc_clustering, kmeans_cost, kmeans_pp, labeling_accuracy
from .covariance import fc_covariance, matrix_dist, recommended_eta
from .datagen import gen_gaussian_cloud, gen_mixture
from .outcomes import is_bottom
from .rng import RandomSource

Task = Literal["avg", "avg-unknown-diam", "cluster", "gmm-label", "covariance"]


class ExperimentSpec(BaseModel):
    """Declarative description of one experiment sweep."""

    task: Task
    n: int = Field(gt=0)
    d: int = Field(default=2, gt=0)
    k: int = Field(default=1, gt=0)
    sigma2: float = Field(default=1.0, gt=0)
    center_spec: str = "unit-ball"
    clip_norm: Optional[float] = None
    norm_bound: float = Field(default=1.0, gt=0)
    r_min: float = Field(default=0.001, gt=0)
    r_max: Optional[float] = None
    t: int = Field(default=1, gt=0)
    oracle: str = "kmeans++"
    rho: Optional[float] = None
    eps: Optional[float] = None
    delta: float = Field(default=1e-8, gt=0, lt=1)
    eta: Optional[float] = None
    repetitions: int = Field(default=1, ge=1)
    seed: int = 0
    noise_free: bool = False
    q_lo: float = 0.1
    q_hi: float = 0.9
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check(self):
        if not 0 <= self.q_lo < self.q_hi <= 1:
            raise ValueError("need 0 <= q_lo < q_hi <= 1")
        if self.task == "covariance":
            if self.eps is None:
                raise ValueError("covariance task needs eps")
        elif self.rho is None:
            raise ValueError(f"task {self.task!r} needs rho")
        return self


def default_avg_radius(n: int, d: int) -> float:
    """Diameter covering almost every pair of n standard-normal samples:
    sqrt(2) * (sqrt(d) + sqrt(ln(100 n)))."""
    return math.sqrt(2.0) * (math.sqrt(d) + math.sqrt(math.log(100.0 * n)))


def trimmed_mean(values, q_lo: float, q_hi: float) -> float:
    """Mean of the sorted values with index rank in [q_lo, q_hi].

    Keeps ``sorted(values)[floor(q_lo * N) : ceil(q_hi * N)]``, so the
    default (0.1, 0.9) pair discards the bottom and top tenth.
    """
    v = np.sort(np.asarray(values, dtype=float))
    n = len(v)
    if n == 0:
        return math.nan
    lo = int(math.floor(q_lo * n))
    hi = int(math.ceil(q_hi * n))
    kept = v[lo:hi]
    return float(kept.mean()) if len(kept) else math.nan


def run_experiment(spec: ExperimentSpec) -> dict:
    """Run every repetition of the spec and aggregate the metric.

    Returns ``{"columns": [...], "rows": [...], "aggregate": {...}}`` where
    each row is one repetition.  Identical specs give identical results
    regardless of ``workers``.
    """
    runner = _TASKS[spec.task]
    root = RandomSource(spec.seed, noise_free=spec.noise_free)

    def one(rep: int) -> dict:
        return runner(spec, rep, root.child(f"rep{rep}"))

    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            rows = list(pool.map(one, range(spec.repetitions)))
    else:
        rows = [one(rep) for rep in range(spec.repetitions)]

    columns = list(rows[0].keys())
    metric_col = _METRIC[spec.task]
    metric_values = [row[metric_col] for row in rows if not row["failed"]]
    aggregate = {
        "repetitions": spec.repetitions,
        "failures": sum(row["failed"] for row in rows),
        "metric": metric_col,
        "trimmed_mean": trimmed_mean(metric_values, spec.q_lo, spec.q_hi)
        if metric_values
        else math.nan,
    }
    return {"columns": columns, "rows": rows, "aggregate": aggregate}


def _run_avg(spec: ExperimentSpec, rep: int, rng: RandomSource) -> dict:
    data = gen_gaussian_cloud(spec.n, spec.d, rng.child("data"))
    r = default_avg_radius(spec.n, spec.d)
    est = fc_avg(
        data, spec.rho, spec.delta, r, rng.child("mech"), rho1_strategy="optimized"
    )
    failed = is_bottom(est)
    err = float(np.linalg.norm(est)) if not failed else math.nan
    return {"rep": rep, "failed": failed, "err_l2": err, "r": r}


def _run_avg_unknown(spec: ExperimentSpec, rep: int, rng: RandomSource) -> dict:
    data = gen_gaussian_cloud(spec.n, spec.d, rng.child("data"))
    r_max = spec.r_max if spec.r_max is not None else 4.0 * default_avg_radius(spec.n, spec.d)
    est = fc_avg_unknown_diam(
        data, spec.rho, spec.delta, 0.1, spec.r_min, r_max, rng.child("mech")
    )
    failed = is_bottom(est)
    err = float(np.linalg.norm(est)) if not failed else math.nan
    return {"rep": rep, "failed": failed, "err_l2": err}


def _run_cluster(spec: ExperimentSpec, rep: int, rng: RandomSource) -> dict:
    data, _ = gen_mixture(
        spec.n, spec.k, spec.d, spec.center_spec, spec.sigma2, spec.clip_norm,
        rng.child("data"),
    )
    result = fc_clustering(
        data, spec.k, spec.rho, spec.delta, 0.1, spec.r_min, spec.norm_bound,
        spec.t, spec.oracle, rng.child("mech"),
    )
    baseline = kmeans_cost(data, kmeans_pp(data, spec.k, rng.child("baseline")))
    row = {
        "rep": rep,
        "failed": result.failed,
        "cost": result.cost if not result.failed else math.nan,
        "baseline_cost": baseline,
    }
    row["normalized_loss"] = (
        1.0 - baseline / result.cost if not result.failed and result.cost else math.nan
    )
    return row


def _run_gmm_label(spec: ExperimentSpec, rep: int, rng: RandomSource) -> dict:
    data, labels = gen_mixture(
        spec.n, spec.k, spec.d, spec.center_spec, spec.sigma2, spec.clip_norm,
        rng.child("data"),
    )
    result = fc_clustering(
        data, spec.k, spec.rho, spec.delta, 0.1, spec.r_min, spec.norm_bound,
        spec.t, spec.oracle, rng.child("mech"),
    )
    acc = (
        labeling_accuracy(labels, result.centers, data)
        if not result.failed
        else math.nan
    )
    return {"rep": rep, "failed": result.failed, "accuracy": acc}


def _run_covariance(spec: ExperimentSpec, rep: int, rng: RandomSource) -> dict:
    gen = rng.child("data").generator
    raw = gen.standard_normal((spec.d, spec.d))
    target = raw @ raw.T / spec.d + np.eye(spec.d)
    chol = np.linalg.cholesky(target)
    points = gen.standard_normal((spec.n, spec.d)) @ chol.T
    eta = spec.eta if spec.eta is not None else recommended_eta(spec.d, 0.1)
    est = fc_covariance(points, spec.eps, spec.delta, spec.t, eta, rng.child("mech"))
    failed = is_bottom(est)
    dist = matrix_dist(est, target) if not failed else math.nan
    return {"rep": rep, "failed": failed, "matrix_dist": dist}


_TASKS = {
    "avg": _run_avg,
    "avg-unknown-diam": _run_avg_unknown,
    "cluster": _run_cluster,
    "gmm-label": _run_gmm_label,
    "covariance": _run_covariance,
}

_METRIC = {
    "avg": "err_l2",
    "avg-unknown-diam": "err_l2",
    "cluster": "cost",
    "gmm-label": "accuracy",
    "covariance": "matrix_dist",
}
