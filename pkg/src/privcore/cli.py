"""Command-line client for the aggregation service.

Subcommands mirror the HTTP endpoints and share their request models; by
default they run the handlers in-process, and with ``--server URL`` they
POST the same request to a running service instead.  Exit codes: 0 on
success, 2 when a gated mechanism aborts (or clustering reports a
fallback failure), 1 on errors.
"""

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from .service import handlers, models

_ENDPOINTS = {
    "avg": "/v1/mean",
    "avg-search": "/v1/mean/search",
    "cluster": "/v1/cluster",
    "cov": "/v1/covariance",
    "experiment": "/v1/experiment",
}


def read_points(path: str) -> list[list[float]]:
    """Load points from a CSV file (one point per row) or a JSON
    array-of-arrays, chosen by file extension."""
    p = Path(path)
    if p.suffix.lower() == ".json":
        data = json.loads(p.read_text())
        return [[float(x) for x in row] for row in data]
    with open(p, newline="") as fh:
        return [[float(x) for x in row] for row in csv.reader(fh) if row]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return "" if value is None else str(value)


def write_output(text: str, path: str | None):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _result_text(resp, fmt: str) -> str:
    if fmt == "json":
        return resp.model_dump_json() + "\n"
    rows = []
    if isinstance(resp, models.MeanResponse) and resp.mean is not None:
        rows = [resp.mean]
    elif isinstance(resp, models.ClusterResponse) and resp.centers is not None:
        rows = resp.centers
    elif isinstance(resp, models.CovarianceResponse) and resp.covariance is not None:
        rows = resp.covariance
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _dispatch(command: str, request, server: str | None):
    if server:
        import httpx

        url = server.rstrip("/") + _ENDPOINTS[command]
        reply = httpx.post(url, json=request.model_dump(), timeout=600.0)
        reply.raise_for_status()
        response_type = {
            "avg": models.MeanResponse,
            "avg-search": models.MeanResponse,
            "cluster": models.ClusterResponse,
            "cov": models.CovarianceResponse,
            "experiment": models.ExperimentResponse,
        }[command]
        return response_type.model_validate(reply.json())
    local = {
        "avg": handlers.run_mean,
        "avg-search": handlers.run_mean_search,
        "cluster": handlers.run_cluster,
        "cov": handlers.run_covariance,
        "experiment": handlers.run_experiment_request,
    }[command]
    return local(request)


def _experiment_csv(resp: models.ExperimentResponse) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(resp.columns)
    for row in resp.rows:
        writer.writerow([_fmt(row.get(col)) for col in resp.columns])
    agg = resp.aggregate
    tail = {col: "" for col in resp.columns}
    tail["rep"] = "aggregate"
    tail[agg.metric] = _fmt(agg.trimmed_mean)
    if "failed" in tail:
        tail["failed"] = str(agg.failures)
    writer.writerow([tail[col] for col in resp.columns])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="privcore", description="Private aggregation on stable cores."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, privacy="rho"):
        p.add_argument("--input", required=True, help="points file (.csv or .json)")
        if privacy == "rho":
            p.add_argument("--rho", type=float, required=True)
        else:
            p.add_argument("--eps", type=float, required=True)
        p.add_argument("--delta", type=float, required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--noise-free", action="store_true")
        p.add_argument("--output", default=None)
        p.add_argument("--format", choices=["json", "csv"], default="json")
        p.add_argument("--server", default=None, help="base URL of a running service")

    p_avg = sub.add_parser("avg", help="private mean with a known diameter")
    common(p_avg)
    p_avg.add_argument("--r", type=float, required=True)
    p_avg.add_argument("--rho1-strategy", choices=["paper", "optimized"], default="paper")

    p_search = sub.add_parser("avg-search", help="private mean, diameter searched")
    common(p_search)
    p_search.add_argument("--r-min", type=float, required=True)
    p_search.add_argument("--r-max", type=float, required=True)
    p_search.add_argument("--beta", type=float, default=0.1)
    p_search.add_argument(
        "--rho1-strategy", choices=["paper", "optimized"], default="paper"
    )

    p_cluster = sub.add_parser("cluster", help="private k-clustering")
    common(p_cluster)
    p_cluster.add_argument("--k", type=int, required=True)
    p_cluster.add_argument("--t", type=int, required=True)
    p_cluster.add_argument("--r-min", type=float, required=True)
    p_cluster.add_argument("--norm-bound", type=float, required=True)
    p_cluster.add_argument("--beta", type=float, default=0.1)
    p_cluster.add_argument("--oracle", default="kmeans++")

    p_cov = sub.add_parser("cov", help="private covariance estimate")
    common(p_cov, privacy="eps")
    p_cov.add_argument("--t", type=int, required=True)
    p_cov.add_argument("--eta", type=float, default=None)
    p_cov.add_argument("--c1", type=float, default=None)

    p_exp = sub.add_parser("experiment", help="run an experiment spec")
    p_exp.add_argument("spec", help="JSON experiment spec file")
    p_exp.add_argument("--output", default=None, help="per-repetition CSV table")
    p_exp.add_argument("--summary", default=None, help="JSON summary file")
    p_exp.add_argument("--workers", type=int, default=None)
    p_exp.add_argument("--server", default=None)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)

    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service.app import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0

    if args.command == "experiment":
        from .experiments import ExperimentSpec

        spec = ExperimentSpec.model_validate_json(Path(args.spec).read_text())
        if args.workers is not None:
            spec = spec.model_copy(update={"workers": args.workers})
        resp = _dispatch("experiment", models.ExperimentRequest(spec=spec), args.server)
        summary = resp.aggregate.model_dump_json() + "\n"
        if args.output:
            Path(args.output).write_text(_experiment_csv(resp))
        if args.summary:
            Path(args.summary).write_text(summary)
        if not args.output and not args.summary:
            sys.stdout.write(summary)
        return 0

    points = read_points(args.input)
    if args.command == "avg":
        req = models.MeanRequest(
            points=points, rho=args.rho, delta=args.delta, r=args.r,
            seed=args.seed, noise_free=args.noise_free,
            rho1_strategy=args.rho1_strategy,
        )
    elif args.command == "avg-search":
        req = models.MeanSearchRequest(
            points=points, rho=args.rho, delta=args.delta, beta=args.beta,
            r_min=args.r_min, r_max=args.r_max, seed=args.seed,
            noise_free=args.noise_free, rho1_strategy=args.rho1_strategy,
        )
    elif args.command == "cluster":
        req = models.ClusterRequest(
            points=points, k=args.k, t=args.t, rho=args.rho, delta=args.delta,
            beta=args.beta, r_min=args.r_min, norm_bound=args.norm_bound,
            oracle=args.oracle, seed=args.seed, noise_free=args.noise_free,
        )
    elif args.command == "cov":
        req = models.CovarianceRequest(
            points=points, eps=args.eps, delta=args.delta, t=args.t,
            eta=args.eta, c1=args.c1, seed=args.seed,
            noise_free=args.noise_free,
        )
    else:  # pragma: no cover
        raise AssertionError(args.command)

    resp = _dispatch(args.command, req, args.server)
    write_output(_result_text(resp, args.format), args.output)
    return 2 if resp.failed else 0


def main():  # entry point
    try:
        code = run()
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = 1
    sys.exit(code)


if __name__ == "__main__":
    main()
