"""FastAPI application exposing the aggregation pipelines."""

from fastapi import FastAPI

from . import handlers, models


def create_app() -> FastAPI:
    app = FastAPI(
        title="privcore",
        description="Differentially private metric aggregation on stable cores.",
    )

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/v1/mean", response_model=models.MeanResponse)
    def mean(req: models.MeanRequest) -> models.MeanResponse:
        return handlers.run_mean(req)

    @app.post("/v1/mean/search", response_model=models.MeanResponse)
    def mean_search(req: models.MeanSearchRequest) -> models.MeanResponse:
        return handlers.run_mean_search(req)

    @app.post("/v1/cluster", response_model=models.ClusterResponse)
    def cluster(req: models.ClusterRequest) -> models.ClusterResponse:
        return handlers.run_cluster(req)

    @app.post("/v1/covariance", response_model=models.CovarianceResponse)
    def covariance(req: models.CovarianceRequest) -> models.CovarianceResponse:
        return handlers.run_covariance(req)

    @app.post("/v1/experiment", response_model=models.ExperimentResponse)
    def experiment(req: models.ExperimentRequest) -> models.ExperimentResponse:
        return handlers.run_experiment_request(req)

    return app


app = create_app()
