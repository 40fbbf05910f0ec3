"""HTTP service wrapping the aggregation pipelines."""

from .app import create_app

__all__ = ["create_app"]
