"""Pure request -> response functions behind the HTTP routes.

The CLI calls these directly (in-process) by default; the HTTP app exposes
the same functions over POST endpoints, so both clients share one
implementation and one validation layer.
"""

import numpy as np

from ..averaging import fc_avg, fc_avg_unknown_diam
from ..clustering import fc_clustering
from ..core import dp_paradigm_cost
from ..covariance import fc_covariance, recommended_eta
from ..budgets import DpBudget
from ..experiments import run_experiment
from ..outcomes import is_bottom
from ..rng import RandomSource
from . import models


def run_mean(req: models.MeanRequest) -> models.MeanResponse:
    rng = RandomSource(req.seed, noise_free=req.noise_free)
    est = fc_avg(
        np.asarray(req.points, dtype=float),
        req.rho,
        req.delta,
        req.r,
        rng,
        rho1_strategy=req.rho1_strategy,
    )
    if is_bottom(est):
        return models.MeanResponse(failed=True)
    return models.MeanResponse(failed=False, mean=[float(x) for x in est])


def run_mean_search(req: models.MeanSearchRequest) -> models.MeanResponse:
    rng = RandomSource(req.seed, noise_free=req.noise_free)
    est = fc_avg_unknown_diam(
        np.asarray(req.points, dtype=float),
        req.rho,
        req.delta,
        req.beta,
        req.r_min,
        req.r_max,
        rng,
        rho1_strategy=req.rho1_strategy,
    )
    if is_bottom(est):
        return models.MeanResponse(failed=True)
    return models.MeanResponse(failed=False, mean=[float(x) for x in est])


def run_cluster(req: models.ClusterRequest) -> models.ClusterResponse:
    rng = RandomSource(req.seed, noise_free=req.noise_free)
    result = fc_clustering(
        np.asarray(req.points, dtype=float),
        req.k,
        req.rho,
        req.delta,
        req.beta,
        req.r_min,
        req.norm_bound,
        req.t,
        req.oracle,
        rng,
    )
    return models.ClusterResponse(
        status=result.status,
        failed=result.failed,
        centers=None if result.failed else [[float(x) for x in c] for c in result.centers],
        cost=None if result.failed else result.cost,
    )


def run_covariance(req: models.CovarianceRequest) -> models.CovarianceResponse:
    rng = RandomSource(req.seed, noise_free=req.noise_free)
    points = np.asarray(req.points, dtype=float)
    eta = req.eta if req.eta is not None else recommended_eta(points.shape[1], 0.1)
    kwargs = {} if req.c1 is None else {"c1": req.c1}
    est = fc_covariance(points, req.eps, req.delta, req.t, eta, rng, **kwargs)
    cost = dp_paradigm_cost(DpBudget(eps=req.eps, delta=req.delta), alpha=0.0)
    total = models.PrivacyCost(eps=cost.eps, delta=cost.delta)
    if is_bottom(est):
        return models.CovarianceResponse(failed=True, total_cost=total)
    return models.CovarianceResponse(
        failed=False,
        covariance=[[float(x) for x in row] for row in est],
        total_cost=total,
    )


def run_experiment_request(req: models.ExperimentRequest) -> models.ExperimentResponse:
    result = run_experiment(req.spec)
    return models.ExperimentResponse(
        columns=result["columns"],
        rows=result["rows"],
        aggregate=models.AggregateSummary(**result["aggregate"]),
    )
